#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dop {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A labeled ordered tree. Leaves are either words (terminal == true) or, in
// fragments only, substitution sites (terminal == false, no children).
struct Tree {
  std::string label;
  std::vector<Tree> children;
  bool terminal = false;

  static Tree word(std::string w);
  static Tree site(std::string label);
  static Tree node(std::string label, std::vector<Tree> children);

  bool is_leaf() const noexcept { return children.empty(); }
  bool is_site() const noexcept { return children.empty() && !terminal; }
  bool is_preterminal() const noexcept {
    return children.size() == 1 && children.front().terminal;
  }

  bool operator==(const Tree& other) const = default;
};

// Terminal words in left-to-right order.
std::vector<std::string> yield(const Tree& tree);

// Number of non-terminal (labeled, non-word) nodes, substitution sites included.
std::size_t nonterminal_node_count(const Tree& tree);

// Edges on the longest root-to-leaf path; a bare leaf has height 0.
int height(const Tree& tree);

}  // namespace dop
