#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dop/tree.hpp"

namespace dop {

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct SourceId {
  std::string file;
  std::size_t index = 0;

  std::string str() const;
};

// Raised when normalization deletes every word of a tree.
class DegenerateTreeError : public Error {
 public:
  explicit DegenerateTreeError(SourceId source);
  const SourceId& source() const noexcept { return source_; }

 private:
  SourceId source_;
};

struct Corpus {
  std::vector<Tree> trees;
  std::vector<SourceId> source_ids;

  std::size_t size() const noexcept { return trees.size(); }
  bool empty() const noexcept { return trees.empty(); }
  const Tree& operator[](std::size_t i) const { return trees[i]; }
  void push_back(Tree tree, SourceId source);

  auto begin() const { return trees.begin(); }
  auto end() const { return trees.end(); }
};

std::set<std::string> default_punctuation_tags();

struct NormalizationConfig {
  bool strip_function_tags = true;
  bool strip_coindexing = true;
  bool remove_quote_tokens = true;
  bool remove_empty_elements = true;
  std::set<std::string> punctuation_tags = default_punctuation_tags();
};

// Reads every top-level bracketed expression in `text`. An unlabeled outer
// wrapper "( (S ...) )" is removed.
Corpus parse_bracketed(std::string_view text, std::string_view source_name = "<input>");

Corpus read_treebank(const std::filesystem::path& path);

// Parses one expression whose leaves may be substitution sites; a bare leaf is
// a site when `is_nonterminal` accepts its text.
Tree parse_tree_with_sites(std::string_view text,
                           const std::function<bool(std::string_view)>& is_nonterminal);

// Canonical form: single spaces, no trailing whitespace. Substitution sites
// print as bare labels.
std::string write_bracketed(const Tree& tree);

Tree normalize(const Tree& tree, const NormalizationConfig& config,
               const SourceId& source = {});
Corpus normalize(const Corpus& corpus, const NormalizationConfig& config);

// Label with function tags removed (NP-SBJ-1 -> NP). Labels that do not start
// with a letter pass through.
std::string strip_function_tag(const std::string& label);
// Removes trailing numeric co-indices (NP-SBJ-1 -> NP-SBJ, NP=2 -> NP).
std::string strip_coindex(const std::string& label);

}  // namespace dop
