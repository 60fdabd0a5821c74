#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dop/treebank.hpp"

namespace dop {

class ScoringError : public Error {
 public:
  using Error::Error;
};

struct Bracket {
  std::string label;
  std::size_t start = 0;
  std::size_t end = 0;
  auto operator<=>(const Bracket&) const = default;
};

using BracketMultiset = std::map<Bracket, std::size_t>;

// evalb conventions: preterminals are not brackets, tokens tagged with a
// punctuation tag do not occupy a span position, and constituents covering
// only such tokens are dropped. The root bracket counts.
BracketMultiset extract_brackets(const Tree& tree, const std::set<std::string>& punctuation_tags);

std::size_t bracket_count(const BracketMultiset& b);
std::size_t matched_count(const BracketMultiset& gold, const BracketMultiset& test);

struct EvalConfig {
  std::set<std::string> punctuation_tags = default_punctuation_tags();
  std::vector<std::size_t> cutoffs = {40, 100};
};

struct CutoffReport {
  std::optional<std::size_t> max_length;  // nullopt: every sentence
  std::size_t sentences = 0;              // scored
  std::size_t skipped = 0;                // yield mismatch
  std::size_t noparse = 0;
  std::size_t exact = 0;
  std::size_t gold_brackets = 0;
  std::size_t test_brackets = 0;
  std::size_t matched = 0;

  double precision() const;
  double recall() const;
  double f1() const;
  double exact_match() const;
};

struct EvalReport {
  std::vector<CutoffReport> blocks;  // one per cutoff, then all sentences

  const CutoffReport& block(std::optional<std::size_t> max_length) const;
  // `key = value` lines under a `[<=N]` or `[all]` header per block.
  void write(std::ostream& out) const;
};

// A test entry without a tree is an unparsed sentence: it contributes zero
// brackets. Sentence length is the gold yield length.
EvalReport score(const std::vector<Tree>& gold, const std::vector<std::optional<Tree>>& test,
                 const EvalConfig& config = {});

// Brackets missing from or extra in the test tree, for a per-sentence listing.
std::string bracket_diff(const Tree& gold, const std::optional<Tree>& test,
                         const std::set<std::string>& punctuation_tags);

}  // namespace dop
