#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dop/tree.hpp"

namespace dop {

enum class Direction { left, right };

struct HeadRule {
  Direction direction = Direction::left;
  std::vector<std::string> priority;
};

// Magerman/Collins-style head percolation table.
//
// File format, one parent per line:
//
//   PARENT direction child1 child2 ...
//
// where direction is `left` (scan children left to right) or `right`. For each
// priority label in order the children are scanned in that direction and the
// first match is the head; if nothing matches, the first child in scan order
// is the head. A line `* direction` sets the direction used for parents that
// have no line of their own. A line starting with `#` is a comment.
struct HeadTable {
  std::map<std::string, HeadRule> rules;
  Direction default_direction = Direction::left;

  static HeadTable parse(std::istream& in);
  static HeadTable load(const std::string& path);
  // The WSJ table shipped in data/heads.txt, compiled in.
  static const HeadTable& wsj();
};

std::size_t head_child_index(const std::string& parent,
                             std::span<const std::string> child_labels,
                             const HeadTable& table);

// Index of the head child of a non-leaf node.
std::size_t head_child_index(const Tree& node, const HeadTable& table);

// The word reached by descending head children from the root, or nullopt if
// the head path ends at a substitution site.
std::optional<std::string> head_word(const Tree& tree, const HeadTable& table);

// Frontier words of `shape` other than the root's head word occurrence.
std::size_t nonheadword_count(const Tree& shape, const HeadTable& table);

}  // namespace dop
