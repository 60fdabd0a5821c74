#include "dop/grammar.hpp"

#include <algorithm>
#include <ostream>

namespace dop {

SymbolId SymbolTable::add(std::string name, SymbolKind kind, FragmentId owner) {
  auto id = static_cast<SymbolId>(names_.size());
  names_.push_back(std::move(name));
  kinds_.push_back(kind);
  owners_.push_back(owner);
  return id;
}

SymbolId SymbolTable::label(const std::string& name) {
  auto it = labels_.find(name);
  if (it != labels_.end()) return it->second;
  SymbolId id = add(name, SymbolKind::label, kNoFragment);
  labels_.emplace(name, id);
  return id;
}

SymbolId SymbolTable::word(const std::string& name) {
  auto it = words_.find(name);
  if (it != words_.end()) return it->second;
  SymbolId id = add(name, SymbolKind::word, kNoFragment);
  words_.emplace(name, id);
  return id;
}

SymbolId SymbolTable::intermediate(FragmentId fragment, std::size_t piece) {
  return add("@" + std::to_string(fragment) + "." + std::to_string(piece),
             SymbolKind::intermediate, fragment);
}

std::optional<SymbolId> SymbolTable::find_label(const std::string& name) const {
  auto it = labels_.find(name);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

std::optional<SymbolId> SymbolTable::find_word(const std::string& name) const {
  auto it = words_.find(name);
  if (it == words_.end()) return std::nullopt;
  return it->second;
}

namespace {

void frontier(const Tree& t, CompiledGrammar& g, std::vector<SymbolId>& out, bool root) {
  if (t.terminal) {
    out.push_back(g.symbols.word(t.label));
    return;
  }
  if (t.is_site() && !root) {
    out.push_back(g.symbols.label(t.label));
    return;
  }
  for (const Tree& c : t.children) frontier(c, g, out, false);
}

void order_unaries(CompiledGrammar& g) {
  // Depth-first over label -> parent edges; an edge back into the active path
  // would close a cycle and is disabled.
  std::map<SymbolId, std::vector<std::uint32_t>> up;
  std::vector<SymbolId> labels;
  for (SymbolId s = 0; s < g.symbols.size(); ++s)
    if (g.symbols.kind(s) == SymbolKind::label) labels.push_back(s);
  for (std::uint32_t r = 0; r < g.rules.size(); ++r) {
    const Rule& rule = g.rules[r];
    if (rule.arity == 1 && g.symbols.kind(rule.rhs[0]) == SymbolKind::label)
      up[rule.rhs[0]].push_back(r);
  }
  enum : std::uint8_t { white, gray, black };
  std::vector<std::uint8_t> color(g.symbols.size(), white);
  std::vector<SymbolId> post;
  std::set<std::uint32_t> disabled;
  struct Frame {
    SymbolId sym;
    std::size_t next;
  };
  for (SymbolId start : labels) {
    if (color[start] != white) continue;
    std::vector<Frame> stack{{start, 0}};
    color[start] = gray;
    while (!stack.empty()) {
      Frame& f = stack.back();
      auto it = up.find(f.sym);
      if (it != up.end() && f.next < it->second.size()) {
        std::uint32_t r = it->second[f.next++];
        SymbolId parent = g.rules[r].lhs;
        if (color[parent] == gray) {
          disabled.insert(r);
        } else if (color[parent] == white) {
          color[parent] = gray;
          stack.push_back({parent, 0});
        }
        continue;
      }
      color[f.sym] = black;
      post.push_back(f.sym);
      stack.pop_back();
    }
  }
  g.unary_order.assign(post.rbegin(), post.rend());
  g.unary_rank.assign(g.symbols.size(), 0);
  for (std::uint32_t i = 0; i < g.unary_order.size(); ++i) g.unary_rank[g.unary_order[i]] = i;
  g.disabled_unary.assign(disabled.begin(), disabled.end());
}

}  // namespace

CompiledGrammar compile(const ProbabilityModel& model) {
  CompiledGrammar g;
  g.fragments = model.fragments;
  for (const std::string& s : model.start_labels) g.start_symbols.insert(g.symbols.label(s));

  std::vector<SymbolId> rhs;
  for (FragmentId fid = 0; fid < g.fragments.size(); ++fid) {
    const WeightedFragment& wf = g.fragments[fid];
    g.fragment_index.emplace(wf.fragment.key, fid);
    SymbolId lhs = g.symbols.label(wf.fragment.root());
    rhs.clear();
    frontier(wf.fragment.shape, g, rhs, true);
    if (rhs.empty() || wf.fragment.shape.is_leaf())
      throw CompileError("fragment " + wf.fragment.key + " has an empty frontier");

    if (rhs.size() == 1) {
      g.rules.push_back({lhs, {rhs[0], 0}, 1, fid, true, wf.prob});
      continue;
    }
    SymbolId left = rhs[0];
    for (std::size_t j = 1; j < rhs.size(); ++j) {
      bool last = j + 1 == rhs.size();
      SymbolId out = last ? lhs : g.symbols.intermediate(fid, j);
      g.rules.push_back({out, {left, rhs[j]}, 2, fid, last, last ? wf.prob : 1.0});
      left = out;
    }
  }

  order_unaries(g);
  std::set<std::uint32_t> disabled(g.disabled_unary.begin(), g.disabled_unary.end());
  for (std::uint32_t r = 0; r < g.rules.size(); ++r) {
    const Rule& rule = g.rules[r];
    if (rule.arity == 1) {
      if (!disabled.count(r)) g.unary_by_child[rule.rhs[0]].push_back(r);
    } else {
      g.binary_by_left[rule.rhs[0]].push_back(r);
      g.binary_by_pair[CompiledGrammar::pair_key(rule.rhs[0], rule.rhs[1])].push_back(r);
    }
  }

  double smallest = 1.0;
  for (const auto& [label, p] : model.label_prior)
    if (p > 0.0) smallest = std::min(smallest, p);
  g.symbol_prior.assign(g.symbols.size(), 0.0);
  for (SymbolId s = 0; s < g.symbols.size(); ++s) {
    switch (g.symbols.kind(s)) {
      case SymbolKind::label: {
        double p = model.prior(g.symbols.name(s));
        g.symbol_prior[s] = p > 0.0 ? p : smallest;
        break;
      }
      case SymbolKind::intermediate: {
        const std::string& root = g.fragments[g.symbols.owner(s)].fragment.root();
        double p = model.prior(root);
        g.symbol_prior[s] = p > 0.0 ? p : smallest;
        break;
      }
      case SymbolKind::word:
        g.symbol_prior[s] = 1.0;
        break;
    }
  }
  return g;
}

void CompiledGrammar::dump(std::ostream& out) const {
  for (const Rule& r : rules) {
    out << symbols.name(r.lhs) << " ->";
    for (int i = 0; i < r.arity; ++i) {
      SymbolId s = r.rhs[i];
      out << ' ' << (symbols.kind(s) == SymbolKind::word ? "\"" + symbols.name(s) + "\""
                                                          : symbols.name(s));
    }
    out << " @" << r.fragment << " p=" << format_probability(r.prob) << '\n';
  }
}

namespace {

Tree* leftmost_site(Tree& t) {
  if (t.is_site()) return &t;
  for (Tree& c : t.children)
    if (Tree* s = leftmost_site(c)) return s;
  return nullptr;
}

}  // namespace

Tree decompile(std::span<const Fragment* const> steps) {
  if (steps.empty()) throw IncompleteDerivationError("empty derivation");
  Tree tree = steps.front()->shape;
  for (std::size_t i = 1; i < steps.size(); ++i) {
    Tree* site = leftmost_site(tree);
    if (!site)
      throw CompositionError("step " + std::to_string(i) + ": no open substitution site for " +
                                 steps[i]->key,
                             i);
    if (site->label != steps[i]->root())
      throw CompositionError("step " + std::to_string(i) + ": leftmost open site is " +
                                 site->label + ", fragment root is " + steps[i]->root(),
                             i);
    *site = steps[i]->shape;
  }
  if (const Tree* open = leftmost_site(tree))
    throw IncompleteDerivationError("derivation leaves site " + open->label + " open");
  return tree;
}

Tree decompile(const Derivation& derivation, const FragmentSource& source) {
  std::vector<const Fragment*> steps;
  steps.reserve(derivation.fragments.size());
  for (FragmentId id : derivation.fragments) steps.push_back(&source.at(id).fragment);
  return decompile(steps);
}

}  // namespace dop
