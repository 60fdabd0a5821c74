#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dop/heads.hpp"
#include "dop/treebank.hpp"

namespace dop {

// An upper bound; nullopt means unlimited.
using Bound = std::optional<int>;

std::string bound_text(Bound b);
// Accepts an integer or one of "inf", "unlimited", "none".
Bound parse_bound(const std::string& text);

// A corpus subtree. Internal nodes keep the full child sequence of the corpus
// node they came from; frontier leaves are words or substitution sites.
struct Fragment {
  Tree shape;
  std::string key;  // write_bracketed(shape)
  int depth = 0;    // edges on the longest root-to-leaf path, words included
  int frontier_words = 0;

  static Fragment from_shape(Tree shape);

  const std::string& root() const noexcept { return shape.label; }
  bool lexicalized() const noexcept { return frontier_words > 0; }
};

struct RestrictionConfig {
  Bound max_depth;
  Bound max_frontier_words;
  // 0 deletes every unlexicalized fragment.
  Bound max_unlexicalized_depth;
  Bound max_nonheadwords;

  void validate() const;
  std::string describe() const;
  bool operator==(const RestrictionConfig&) const = default;
};

class ExplosionError : public Error {
 public:
  ExplosionError(std::uint64_t occurrences, std::uint64_t ceiling);
};

class SamplingExhaustedError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::uint64_t kDefaultExplosionCeiling = 100'000'000;

// Closed-form number of occurrences enumerate_fragments yields for `tree`;
// saturates at UINT64_MAX.
std::uint64_t count_fragment_occurrences(const Tree& tree, Bound max_depth = {});

// Every fragment occurrence of depth <= max_depth rooted at every node of a
// corpus tree, in pre-order of the root node. Throws ExplosionError when the
// occurrence count exceeds `ceiling`.
void for_each_fragment(const Tree& tree, Bound max_depth,
                       const std::function<void(Fragment&&)>& visit,
                       std::uint64_t ceiling = kDefaultExplosionCeiling);
std::vector<Fragment> enumerate_fragments(const Tree& tree, Bound max_depth = {},
                                          std::uint64_t ceiling = kDefaultExplosionCeiling);

struct SamplingStats {
  std::uint64_t attempts = 0;
  std::uint64_t budget_overruns = 0;  // draws that needed more than the retry budget
};

inline constexpr int kSampleRetryBudget = 100;

// Random fragments of exactly `target_depth`: pick a tree and a node uniformly,
// expand each frontier nonterminal with probability 1/2 (recursively), keep
// the result if its depth equals target_depth. Deterministic for a seed.
std::vector<Fragment> sample_fragments(const Corpus& corpus, int target_depth, std::size_t n,
                                       std::uint64_t seed, SamplingStats* stats = nullptr);

bool passes(const Fragment& fragment, const RestrictionConfig& config, const HeadTable& table);

struct Provenance {
  // Exhaustive extraction up to exhaustive_depth (unlimited when nullopt), plus
  // per-depth random samples.
  Bound exhaustive_depth;
  bool sampled = false;
  std::map<int, std::uint64_t> sample_sizes;
  std::uint64_t seed = 0;
  std::string restriction;  // describe() of the filter last applied, if any

  std::string describe() const;
  static Provenance parse(const std::string& text);
};

// Label statistics of the training corpus, needed for priors and start symbols.
struct CorpusStats {
  std::map<std::string, std::uint64_t> node_counts;  // nonterminal label -> nodes
  std::set<std::string> start_labels;                // root labels

  static CorpusStats of(const Corpus& corpus);
  void merge(const CorpusStats& other);
};

struct FragmentEntry {
  Fragment fragment;
  std::uint64_t count = 0;
};

class FragmentTable {
 public:
  // Throws if a different shape already owns the same key.
  void add(const Fragment& fragment, std::uint64_t count = 1);
  void merge(const FragmentTable& other);

  const std::map<std::string, FragmentEntry>& entries() const noexcept { return entries_; }
  const std::map<std::string, std::uint64_t>& root_totals() const noexcept { return root_totals_; }
  std::uint64_t count(const std::string& key) const;
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::uint64_t total_occurrences() const;

  FragmentTable filter(const RestrictionConfig& config, const HeadTable& table) const;

  // Every nonterminal label appearing in any fragment, sites included.
  std::set<std::string> nonterminals() const;

  // Header lines, then `count TAB key` per fragment in key order, with a
  // third `pattern` field for keys that need one. Root totals are recomputed
  // on read.
  void write(std::ostream& out) const;
  static FragmentTable read(std::istream& in);

  // FNV-1a over the count/key records.
  std::uint64_t content_hash() const;

  Provenance provenance;
  CorpusStats corpus;

 private:
  std::map<std::string, FragmentEntry> entries_;
  std::map<std::string, std::uint64_t> root_totals_;
};

FragmentTable collect(std::span<const Fragment> fragments, const RestrictionConfig& config,
                      const HeadTable& table);

// Fragment from its canonical key; bare leaves are sites when listed in
// `nonterminals`.
Fragment fragment_from_key(const std::string& key, const std::set<std::string>& nonterminals);

// Same, with the leaf kinds spelled out: one 'w' (word) or 's' (site) per
// bare leaf, left to right.
Fragment fragment_from_key(const std::string& key, std::string_view pattern);

// 'w'/'s' per frontier leaf of `shape`, left to right.
std::string frontier_pattern(const Tree& shape);

// The pattern files store beside a key that would read back wrong against
// `nonterminals` (a word spelled like a label, as in "(. .)"); empty otherwise.
std::string key_pattern(const Fragment& f, const std::set<std::string>& nonterminals);

}  // namespace dop
