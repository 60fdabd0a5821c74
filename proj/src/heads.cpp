#include "dop/heads.hpp"

#include <fstream>
#include <sstream>

namespace dop {

extern const char* const kWsjHeadTable;

namespace {

Direction parse_direction(const std::string& s, std::size_t line) {
  if (s == "left") return Direction::left;
  if (s == "right") return Direction::right;
  throw Error("head table line " + std::to_string(line) + ": bad direction '" + s + "'");
}

}  // namespace

HeadTable HeadTable::parse(std::istream& in) {
  HeadTable table;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::istringstream fields(raw);
    std::string parent, dir;
    // `#` only comments when leading: it is also the WSJ pound-sign tag.
    if (!(fields >> parent) || parent.front() == '#') continue;
    if (!(fields >> dir)) throw Error("head table line " + std::to_string(lineno) + ": missing direction");
    Direction d = parse_direction(dir, lineno);
    if (parent == "*") {
      table.default_direction = d;
      continue;
    }
    HeadRule rule{d, {}};
    for (std::string label; fields >> label;) rule.priority.push_back(label);
    table.rules[parent] = std::move(rule);
  }
  return table;
}

HeadTable HeadTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open head table '" + path + "'");
  return parse(in);
}

const HeadTable& HeadTable::wsj() {
  static const HeadTable table = [] {
    std::istringstream in(kWsjHeadTable);
    return parse(in);
  }();
  return table;
}

std::size_t head_child_index(const std::string& parent,
                             std::span<const std::string> child_labels,
                             const HeadTable& table) {
  const std::size_t n = child_labels.size();
  if (n <= 1) return 0;
  auto it = table.rules.find(parent);
  Direction dir = it == table.rules.end() ? table.default_direction : it->second.direction;
  auto at = [&](std::size_t k) { return dir == Direction::left ? k : n - 1 - k; };
  if (it != table.rules.end()) {
    for (const std::string& wanted : it->second.priority)
      for (std::size_t k = 0; k < n; ++k)
        if (child_labels[at(k)] == wanted) return at(k);
  }
  return at(0);
}

std::size_t head_child_index(const Tree& node, const HeadTable& table) {
  std::vector<std::string> labels;
  labels.reserve(node.children.size());
  for (const Tree& c : node.children) labels.push_back(c.label);
  return head_child_index(node.label, labels, table);
}

std::optional<std::string> head_word(const Tree& tree, const HeadTable& table) {
  const Tree* node = &tree;
  while (!node->is_leaf()) node = &node->children[head_child_index(*node, table)];
  if (!node->terminal) return std::nullopt;
  return node->label;
}

std::size_t nonheadword_count(const Tree& shape, const HeadTable& table) {
  std::size_t words = yield(shape).size();
  return head_word(shape, table) ? words - 1 : words;
}

}  // namespace dop
