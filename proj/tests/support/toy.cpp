#include "toy.hpp"

#include <functional>
#include <set>
#include <stdexcept>
#include <tuple>

namespace toy {

namespace {

const std::vector<std::string> kLabels{"S", "X", "Y", "Z"};
const std::vector<std::string> kTags{"A", "B", "C", "D"};
const std::vector<std::vector<std::string>> kWords{
    {"a", "b", "c"}, {"b", "c", "d"}, {"c", "d", "e"}, {"a", "e"}};

std::size_t below(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

struct Grower {
  std::mt19937_64& rng;
  std::size_t words = 0;

  dop::Tree tag() {
    std::size_t t = below(rng, kTags.size());
    ++words;
    return dop::Tree::node(kTags[t], {dop::Tree::word(kWords[t][below(rng, kWords[t].size())])});
  }

  // `budget` is the depth still available below this node.
  dop::Tree grow(std::size_t rank, int budget) {
    std::size_t arity = 1 + below(rng, 3);
    std::vector<dop::Tree> kids;
    for (std::size_t c = 0; c < arity; ++c) {
      bool internal = budget >= 3 && below(rng, 3) != 0;
      if (arity == 1) {
        if (rank + 1 >= kLabels.size()) internal = false;
        if (internal) {
          std::size_t r = rank + 1 + below(rng, kLabels.size() - rank - 1);
          kids.push_back(grow(r, budget - 1));
        } else {
          kids.push_back(tag());
        }
      } else if (internal) {
        std::size_t r = below(rng, kLabels.size());
        kids.push_back(grow(r, budget - 1));
      } else {
        kids.push_back(tag());
      }
    }
    return dop::Tree::node(kLabels[rank], std::move(kids));
  }
};

}  // namespace

dop::Tree random_tree(std::mt19937_64& rng, const Shape& shape) {
  while (true) {
    Grower g{rng};
    dop::Tree t = g.grow(0, shape.max_depth);
    if (g.words <= shape.max_yield && dop::height(t) <= shape.max_depth) return t;
  }
}

dop::Corpus random_corpus(std::mt19937_64& rng, const Shape& shape) {
  dop::Corpus c;
  std::size_t n = 1 + below(rng, shape.max_trees);
  for (std::size_t i = 0; i < n; ++i) c.push_back(random_tree(rng, shape), {"toy", i});
  return c;
}

dop::Tree tree(const std::string& bracketed) {
  dop::Corpus c = dop::parse_bracketed(bracketed);
  if (c.size() != 1) throw std::runtime_error("expected one tree: " + bracketed);
  return c.trees.front();
}

dop::Corpus corpus(const std::vector<std::string>& bracketed) {
  dop::Corpus c;
  for (std::size_t i = 0; i < bracketed.size(); ++i) c.push_back(tree(bracketed[i]), {"toy", i});
  return c;
}

dop::FragmentTable exhaustive_table(const dop::Corpus& corpus, dop::Bound max_depth) {
  dop::FragmentTable table;
  table.corpus = dop::CorpusStats::of(corpus);
  for (const dop::Tree& t : corpus)
    for (const dop::Fragment& f : dop::enumerate_fragments(t, max_depth)) table.add(f);
  return table;
}

dop::ProbabilityModel train(const dop::Corpus& corpus, dop::Bound max_depth) {
  return dop::estimate(exhaustive_table(corpus, max_depth));
}

std::uint64_t sigma(const dop::Tree& node) {
  if (node.is_preterminal()) return 1;
  std::uint64_t s = 1;
  for (const dop::Tree& c : node.children) s *= sigma(c) + 1;
  return s;
}

std::uint64_t tree_derivations(const dop::Tree& node) {
  if (node.is_preterminal()) return 1;
  std::uint64_t d = 1;
  for (const dop::Tree& c : node.children) d *= 2 * tree_derivations(c);
  return d;
}

std::uint64_t occurrences(const dop::Tree& tree) {
  if (tree.terminal || tree.is_leaf()) return 0;
  std::uint64_t n = sigma(tree);
  for (const dop::Tree& c : tree.children) n += occurrences(c);
  return n;
}

Pcfg::Pcfg(const dop::Corpus& corpus) {
  std::map<std::pair<std::string, std::vector<Element>>, double> counts;
  std::map<std::string, double> lhs;
  std::function<void(const dop::Tree&)> walk = [&](const dop::Tree& t) {
    if (t.terminal) return;
    std::vector<Element> rhs;
    for (const dop::Tree& c : t.children) rhs.push_back({c.label, c.terminal});
    counts[{t.label, rhs}] += 1;
    lhs[t.label] += 1;
    for (const dop::Tree& c : t.children) walk(c);
  };
  for (const dop::Tree& t : corpus) {
    walk(t);
    roots_.push_back(t.label);
  }
  for (const auto& [rule, n] : counts) rules_[rule.first][rule.second] = n / lhs[rule.first];
}

const std::vector<Pcfg::Entry>& Pcfg::expand(const std::string& label, std::size_t i,
                                             std::size_t j, const std::vector<std::string>& s,
                                             Memo& memo) const {
  auto key = std::make_tuple(label, i, j);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  std::vector<Entry> out;
  auto rules = rules_.find(label);
  if (rules != rules_.end())
    for (const auto& [rhs, p] : rules->second) {
      std::vector<dop::Tree> kids;
      sequence(rhs, 0, i, j, s, memo, kids, p, label, out);
    }
  return memo[key] = std::move(out);
}

void Pcfg::sequence(const std::vector<Element>& rhs, std::size_t k, std::size_t i, std::size_t j,
                    const std::vector<std::string>& s, Memo& memo, std::vector<dop::Tree>& kids,
                    double prob, const std::string& label, std::vector<Entry>& out) const {
  if (k == rhs.size()) {
    if (i == j) out.push_back({dop::Tree::node(label, kids), prob});
    return;
  }
  std::size_t left = rhs.size() - k - 1;
  if (j - i < left + 1) return;
  const Element& e = rhs[k];
  if (e.word) {
    if (s[i] != e.name) return;
    kids.push_back(dop::Tree::word(e.name));
    sequence(rhs, k + 1, i + 1, j, s, memo, kids, prob, label, out);
    kids.pop_back();
    return;
  }
  for (std::size_t m = i + 1; m + left <= j; ++m) {
    // Copy: the memo may grow while we recurse.
    std::vector<Entry> heads = expand(e.name, i, m, s, memo);
    for (const Entry& h : heads) {
      kids.push_back(h.tree);
      sequence(rhs, k + 1, m, j, s, memo, kids, prob * h.prob, label, out);
      kids.pop_back();
    }
  }
}

std::map<std::string, double> Pcfg::parses(const std::vector<std::string>& sentence) const {
  std::map<std::string, double> out;
  if (sentence.empty()) return out;
  Memo memo;
  std::set<std::string> roots(roots_.begin(), roots_.end());
  for (const std::string& r : roots)
    for (const Entry& e : expand(r, 0, sentence.size(), sentence, memo))
      out[dop::write_bracketed(e.tree)] += e.prob;
  return out;
}

}  // namespace toy
