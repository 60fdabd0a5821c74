#include "dop/parser.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

namespace dop {

Chart::Chart(const CompiledGrammar& grammar, std::vector<std::string> sentence)
    : grammar_(&grammar), sentence_(std::move(sentence)) {
  source_.grammar = &grammar;
  cells_.resize((sentence_.size() + 1) * (sentence_.size() + 1));
}

std::string Chart::symbol_name(SymbolId s) const {
  if (s >= grammar_->symbols.size()) return sentence_[s - grammar_->symbols.size()];
  return grammar_->symbols.name(s);
}

std::optional<std::int32_t> Chart::find(std::uint32_t start, std::uint32_t end, SymbolId s) const {
  if (start >= end || end > sentence_.size()) return std::nullopt;
  const Cell& c = cell(start, end);
  auto it = c.by_symbol.find(s);
  if (it == c.by_symbol.end() || !items_[it->second].alive) return std::nullopt;
  return it->second;
}

std::vector<std::int32_t> Chart::goals() const {
  std::vector<std::int32_t> out;
  if (sentence_.empty()) return out;
  for (std::int32_t idx : cell(0, static_cast<std::uint32_t>(sentence_.size())).items)
    if (grammar_->start_symbols.count(items_[idx].symbol)) out.push_back(idx);
  return out;
}

void Chart::add_edge(std::uint32_t i, std::uint32_t j, SymbolId s, Edge e, double score,
                     double unpruned) {
  Cell& c = cell(i, j);
  auto it = c.by_symbol.find(s);
  if (it == c.by_symbol.end()) {
    auto idx = static_cast<std::int32_t>(items_.size());
    items_.push_back({s, i, j, 0.0, false, true, {}, 0.0});
    c.items.push_back(idx);
    c.all.push_back(idx);
    it = c.by_symbol.emplace(s, idx).first;
  }
  Item& item = items_[it->second];
  if (score > 0.0) {
    item.edges.push_back(e);
    item.inside = std::max(item.inside, score);
  }
  item.unpruned = std::max(item.unpruned, unpruned);
}

void Chart::close_unaries(std::uint32_t i, std::uint32_t j) {
  Cell& c = cell(i, j);
  if (c.items.empty()) return;
  for (SymbolId s : grammar_->unary_order) {
    auto it = c.by_symbol.find(s);
    if (it == c.by_symbol.end()) continue;
    auto rules = grammar_->unary_by_child.find(s);
    if (rules == grammar_->unary_by_child.end()) continue;
    std::int32_t child = it->second;
    const Item& c_item = items_[child];
    double inside = c_item.alive ? c_item.inside : 0.0;
    double unpruned = c_item.unpruned;
    for (std::uint32_t r : rules->second) {
      const Rule& rule = grammar_->rules[r];
      add_edge(i, j, rule.lhs, {r, child, -1}, rule.prob * inside, rule.prob * unpruned);
    }
  }
}

void Chart::prune(std::uint32_t i, std::uint32_t j, double beam) {
  Cell& c = cell(i, j);
  const auto& prior = grammar_->symbol_prior;
  // Intermediate items carry no probability until their fragment completes,
  // so only complete items set the cell's best.
  double best = 0.0;
  if (beam > 0.0)
    for (std::int32_t idx : c.items) {
      const Item& item = items_[idx];
      if (!item.axiom && grammar_->symbols.kind(item.symbol) == SymbolKind::label)
        best = std::max(best, item.unpruned * prior[item.symbol]);
    }
  const double threshold = beam * best;

  // Same-cell children (unary edges) come first in this order.
  auto rank = [&](std::int32_t idx) -> std::uint64_t {
    SymbolId s = items_[idx].symbol;
    if (is_word(s) || grammar_->symbols.kind(s) != SymbolKind::label) return 0;
    return 1 + static_cast<std::uint64_t>(grammar_->unary_rank[s]);
  };
  std::stable_sort(c.items.begin(), c.items.end(),
                   [&](std::int32_t a, std::int32_t b) { return rank(a) < rank(b); });

  std::vector<std::int32_t> kept;
  kept.reserve(c.items.size());
  for (std::int32_t idx : c.items) {
    Item& item = items_[idx];
    if (item.axiom) {
      kept.push_back(idx);
      continue;
    }
    if (beam > 0.0 && item.unpruned * prior[item.symbol] < threshold) {
      item.alive = false;
      item.edges.clear();
      ++diagnostics_.pruned;
      continue;
    }
    double inside = 0.0;
    std::size_t out = 0;
    for (const Edge& e : item.edges) {
      const Item& l = items_[e.left];
      if (!l.alive || (e.right >= 0 && !items_[e.right].alive)) continue;
      double score = rule(e.rule).prob * l.inside * (e.right >= 0 ? items_[e.right].inside : 1.0);
      inside = std::max(inside, score);
      item.edges[out++] = e;
    }
    item.edges.resize(out);
    if (out == 0) {
      item.alive = false;
      ++diagnostics_.pruned;
      continue;
    }
    item.inside = inside;
    kept.push_back(idx);
  }
  c.items = std::move(kept);
  for (std::int32_t idx : c.items) {
    order_.push_back(idx);
    ++diagnostics_.items;
    diagnostics_.edges += items_[idx].edges.size();
  }
}

Chart build_chart(const std::vector<std::string>& sentence, const CompiledGrammar& grammar,
                  const ProbabilityModel& model, double beam) {
  Chart chart(grammar, sentence);
  const auto n = static_cast<std::uint32_t>(sentence.size());
  const auto base_symbols = static_cast<SymbolId>(grammar.symbols.size());
  const auto base_rules = static_cast<std::uint32_t>(grammar.rules.size());
  const auto base_fragments = static_cast<FragmentId>(grammar.fragments.size());

  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string& w = sentence[i];
    auto known = grammar.symbols.find_word(w);
    SymbolId sym = known ? *known : base_symbols + i;
    auto word_item = static_cast<std::int32_t>(chart.items_.size());
    chart.items_.push_back({sym, i, i + 1, 1.0, true, true, {}, 1.0});
    chart.cell(i, i + 1).items.push_back(word_item);
    chart.cell(i, i + 1).all.push_back(word_item);
    chart.cell(i, i + 1).by_symbol.emplace(sym, word_item);

    if (known) {
      auto rules = grammar.unary_by_child.find(sym);
      if (rules != grammar.unary_by_child.end())
        for (std::uint32_t r : rules->second)
          chart.add_edge(i, i + 1, grammar.rules[r].lhs, {r, word_item, -1},
                         grammar.rules[r].prob, grammar.rules[r].prob);
    } else {
      ++chart.diagnostics_.unknown_words;
      if (model.unknown) {
        for (auto& [frag, p] : unknown_word_fragments(w, i == 0, *model.unknown)) {
          auto tag = grammar.symbols.find_label(frag.root());
          if (!tag) continue;
          auto fid = static_cast<FragmentId>(base_fragments + chart.source_.local.size());
          chart.source_.local.push_back({std::move(frag), p});
          auto r = static_cast<std::uint32_t>(base_rules + chart.local_rules_.size());
          chart.local_rules_.push_back({*tag, {sym, 0}, 1, fid, true, p});
          chart.add_edge(i, i + 1, *tag, {r, word_item, -1}, p, p);
        }
      }
    }
    chart.close_unaries(i, i + 1);
    chart.prune(i, i + 1, beam);
  }

  for (std::uint32_t width = 2; width <= n; ++width) {
    for (std::uint32_t i = 0; i + width <= n; ++i) {
      const std::uint32_t j = i + width;
      for (std::uint32_t m = i + 1; m < j; ++m) {
        const Chart::Cell& left = chart.cell(i, m);
        const Chart::Cell& right = chart.cell(m, j);
        if (left.all.empty() || right.all.empty()) continue;
        for (std::int32_t li : left.all) {
          const SymbolId ls = chart.items_[li].symbol;
          auto by_left = grammar.binary_by_left.find(ls);
          if (by_left == grammar.binary_by_left.end()) continue;
          const double lin = chart.items_[li].alive ? chart.items_[li].inside : 0.0;
          const double lun = chart.items_[li].unpruned;
          auto edge = [&](std::uint32_t r, std::int32_t ri) {
            const Rule& rule = grammar.rules[r];
            const Chart::Item& rt = chart.items_[ri];
            const double rin = rt.alive ? rt.inside : 0.0;
            const double run = rt.unpruned;
            chart.add_edge(i, j, rule.lhs, {r, li, ri}, rule.prob * lin * rin,
                           rule.prob * lun * run);
          };
          if (by_left->second.size() <= right.all.size()) {
            for (std::uint32_t r : by_left->second) {
              auto ri = right.by_symbol.find(grammar.rules[r].rhs[1]);
              if (ri != right.by_symbol.end()) edge(r, ri->second);
            }
          } else {
            for (std::int32_t ri : right.all) {
              auto rules = grammar.binary_by_pair.find(
                  CompiledGrammar::pair_key(ls, chart.items_[ri].symbol));
              if (rules == grammar.binary_by_pair.end()) continue;
              for (std::uint32_t r : rules->second) edge(r, ri);
            }
          }
        }
      }
      chart.close_unaries(i, j);
      chart.prune(i, j, beam);
    }
  }
  return chart;
}

namespace {

constexpr std::uint32_t kGoalRule = std::numeric_limits<std::uint32_t>::max();

struct Candidate {
  double score;
  std::int32_t edge;
  std::uint32_t rank[2];
};

// Max-heap order: higher score first, then smaller (edge, ranks).
bool lower_priority(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score < b.score;
  return std::tie(a.edge, a.rank[0], a.rank[1]) > std::tie(b.edge, b.rank[0], b.rank[1]);
}

struct SeenKey {
  std::int32_t node, edge;
  std::uint32_t r0, r1;
  bool operator==(const SeenKey&) const = default;
};

struct SeenHash {
  std::size_t operator()(const SeenKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint64_t v : {std::uint64_t(std::uint32_t(k.node)), std::uint64_t(std::uint32_t(k.edge)),
                            std::uint64_t(k.r0), std::uint64_t(k.r1)}) {
      h ^= v;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

// Lazy k-best over the chart hypergraph (Huang & Chiang's third algorithm).
class KBest {
 public:
  explicit KBest(const Chart& chart)
      : chart_(chart), goal_(static_cast<std::int32_t>(chart.items().size())) {
    for (std::int32_t g : chart.goals()) goal_edges_.push_back({kGoalRule, g, -1});
    const std::size_t nodes = chart.items().size() + 1;
    found_.resize(nodes);
    heap_.resize(nodes);
    started_.assign(nodes, 0);
    expanded_.assign(nodes, 0);
  }

  std::int32_t goal() const { return goal_; }
  const std::vector<Candidate>& found(std::int32_t v) const { return found_[v]; }

  // Makes found(v) hold at least kth+1 entries if that many exist.
  void ensure(std::int32_t v, std::size_t kth) {
    if (!started_[v]) start(v);
    auto& list = found_[v];
    auto& heap = heap_[v];
    while (list.size() <= kth) {
      while (expanded_[v] < list.size()) {
        Candidate c = list[expanded_[v]++];
        push_successors(v, c);
      }
      if (heap.empty()) break;
      std::pop_heap(heap.begin(), heap.end(), lower_priority);
      list.push_back(heap.back());
      heap.pop_back();
    }
  }

  const std::vector<Chart::Edge>& edges(std::int32_t v) const {
    return v == goal_ ? goal_edges_ : chart_.items()[v].edges;
  }
  double prob(const Chart::Edge& e) const {
    return e.rule == kGoalRule ? 1.0 : chart_.rule(e.rule).prob;
  }

 private:
  void start(std::int32_t v) {
    started_[v] = 1;
    if (v != goal_ && chart_.items()[v].axiom) {
      found_[v].push_back({1.0, -1, {0, 0}});
      return;
    }
    const auto& es = edges(v);
    for (std::size_t e = 0; e < es.size(); ++e) {
      Candidate c{0.0, static_cast<std::int32_t>(e), {0, 0}};
      if (score(es[e], c)) {
        seen_.insert({v, c.edge, 0, 0});
        heap_[v].push_back(c);
        std::push_heap(heap_[v].begin(), heap_[v].end(), lower_priority);
      }
    }
  }

  bool score(const Chart::Edge& e, Candidate& c) {
    double s = prob(e);
    std::int32_t kids[2] = {e.left, e.right};
    for (int i = 0; i < 2; ++i) {
      if (kids[i] < 0) continue;
      ensure(kids[i], c.rank[i]);
      const auto& list = found_[kids[i]];
      if (c.rank[i] >= list.size()) return false;
      s *= list[c.rank[i]].score;
    }
    c.score = s;
    return true;
  }

  void push_successors(std::int32_t v, const Candidate& c) {
    if (c.edge < 0) return;
    const Chart::Edge e = edges(v)[c.edge];
    std::int32_t kids[2] = {e.left, e.right};
    for (int i = 0; i < 2; ++i) {
      if (kids[i] < 0) continue;
      Candidate next = c;
      ++next.rank[i];
      SeenKey key{v, next.edge, next.rank[0], next.rank[1]};
      if (seen_.count(key)) continue;
      if (!score(e, next)) continue;
      seen_.insert(key);
      heap_[v].push_back(next);
      std::push_heap(heap_[v].begin(), heap_[v].end(), lower_priority);
    }
  }

  const Chart& chart_;
  std::int32_t goal_;
  std::vector<Chart::Edge> goal_edges_;
  std::vector<std::vector<Candidate>> found_;
  std::vector<std::vector<Candidate>> heap_;
  std::vector<std::uint8_t> started_;
  std::vector<std::size_t> expanded_;
  std::unordered_set<SeenKey, SeenHash> seen_;
};

class Unpacker {
 public:
  Unpacker(const Chart& chart, const KBest& kb) : chart_(chart), kb_(kb) {}

  // Fragments of the rank-th derivation of a label item, leftmost order.
  void fragments(std::int32_t v, std::uint32_t rank, std::vector<FragmentId>& out) const {
    const Candidate& c = kb_.found(v)[rank];
    const Chart::Edge& e = kb_.edges(v)[c.edge];
    out.push_back(chart_.rule(e.rule).fragment);
    std::vector<std::pair<std::int32_t, std::uint32_t>> sites;
    collect_sites(e, c, sites);
    for (auto [site, r] : sites) fragments(site, r, out);
  }

 private:
  void collect_sites(const Chart::Edge& e, const Candidate& c,
                     std::vector<std::pair<std::int32_t, std::uint32_t>>& sites) const {
    std::int32_t kids[2] = {e.left, e.right};
    for (int i = 0; i < 2; ++i) {
      if (kids[i] < 0) continue;
      const Chart::Item& child = chart_.items()[kids[i]];
      if (child.axiom) continue;
      const SymbolId s = child.symbol;
      if (chart_.grammar().symbols.kind(s) == SymbolKind::intermediate) {
        const Candidate& cc = kb_.found(kids[i])[c.rank[i]];
        collect_sites(kb_.edges(kids[i])[cc.edge], cc, sites);
      } else {
        sites.emplace_back(kids[i], c.rank[i]);
      }
    }
  }

  const Chart& chart_;
  const KBest& kb_;
};

}  // namespace

std::vector<Derivation> kbest(const Chart& chart, std::size_t k) {
  std::vector<Derivation> out;
  if (k == 0 || chart.goals().empty()) return out;
  KBest kb(chart);
  const std::int32_t goal = kb.goal();
  kb.ensure(goal, k - 1);
  const auto& found = kb.found(goal);
  if (found.size() >= k) {
    const double kth = found[k - 1].score;
    for (std::size_t next = k;; ++next) {
      kb.ensure(goal, next);
      if (found.size() <= next || found[next].score != kth) break;
    }
  }
  const double cutoff = found.size() >= k ? found[k - 1].score : 0.0;

  Unpacker unpack(chart, kb);
  const FragmentSource& source = chart.fragments();
  for (std::size_t r = 0; r < found.size(); ++r) {
    if (found[r].score < cutoff) break;
    const Chart::Edge& e = kb.edges(goal)[found[r].edge];
    Derivation d;
    d.probability = found[r].score;
    unpack.fragments(e.left, found[r].rank[0], d.fragments);
    for (std::size_t i = 0; i < d.fragments.size(); ++i) {
      if (i) d.text += " + ";
      d.text += source.at(d.fragments[i]).fragment.key;
    }
    out.push_back(std::move(d));
  }
  std::stable_sort(out.begin(), out.end(), [](const Derivation& a, const Derivation& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.text < b.text;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

std::uint64_t derivation_count(const Chart& chart) {
  constexpr std::uint64_t kSat = std::numeric_limits<std::uint64_t>::max();
  auto add = [](std::uint64_t a, std::uint64_t b) { return a > kSat - b ? kSat : a + b; };
  auto mul = [](std::uint64_t a, std::uint64_t b) {
    if (a == 0 || b == 0) return std::uint64_t{0};
    return a > kSat / b ? kSat : a * b;
  };
  std::vector<std::uint64_t> count(chart.items().size(), 0);
  for (std::int32_t idx : chart.order()) {
    const Chart::Item& item = chart.items()[idx];
    if (item.axiom) {
      count[idx] = 1;
      continue;
    }
    std::uint64_t total = 0;
    for (const Chart::Edge& e : item.edges) {
      std::uint64_t c = count[e.left];
      if (e.right >= 0) c = mul(c, count[e.right]);
      total = add(total, c);
    }
    count[idx] = total;
  }
  std::uint64_t total = 0;
  for (std::int32_t g : chart.goals()) total = add(total, count[g]);
  return total;
}

std::set<std::tuple<std::uint32_t, std::uint32_t, std::string>> item_set(const Chart& chart) {
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::string>> out;
  for (std::int32_t idx : chart.order()) {
    const Chart::Item& item = chart.items()[idx];
    if (!item.axiom) out.emplace(item.start, item.end, chart.symbol_name(item.symbol));
  }
  return out;
}

ParseResult most_probable_parse(std::span<const Derivation> derivations,
                                const FragmentSource& source) {
  ParseResult result;
  result.kbest.assign(derivations.begin(), derivations.end());
  std::map<std::string, std::pair<double, Tree>> mass;
  for (const Derivation& d : derivations) {
    Tree t = decompile(d, source);
    std::string text = write_bracketed(t);
    auto [it, inserted] = mass.try_emplace(std::move(text), 0.0, Tree{});
    if (inserted) it->second.second = std::move(t);
    it->second.first += d.probability;
  }
  result.distinct_trees = mass.size();
  // Map order is text order, so the first (near-)maximum wins ties.
  auto pick = first_near_max(mass, [](const auto& e) { return e.second.first; });
  if (pick >= 0) {
    auto it = std::next(mass.begin(), pick);
    result.best_text = it->first;
    result.best_tree = std::move(it->second.second);
    result.best_tree_prob = it->second.first;
  }
  return result;
}

std::string ParseResult::serialize() const {
  std::ostringstream out;
  out << "tree\t" << (best_tree ? best_text : "(NOPARSE)") << '\n';
  out << "prob\t" << format_probability(best_tree_prob) << '\n';
  out << "trees\t" << distinct_trees << '\n';
  out << "chart\titems=" << diagnostics.items << " edges=" << diagnostics.edges
      << " pruned=" << diagnostics.pruned << " unknown=" << diagnostics.unknown_words << '\n';
  for (const Derivation& d : kbest)
    out << "derivation\t" << format_probability(d.probability) << '\t' << d.text << '\n';
  return out.str();
}

ParseResult parse_sentence(const std::vector<std::string>& sentence,
                           const CompiledGrammar& grammar, const ProbabilityModel& model,
                           const ParseOptions& options) {
  auto t0 = std::chrono::steady_clock::now();
  Chart chart = build_chart(sentence, grammar, model, options.beam);
  std::vector<Derivation> ds = kbest(chart, options.k);
  ParseResult result = most_probable_parse(ds, chart.fragments());
  result.diagnostics = chart.diagnostics();
  if (options.count_derivations) result.chart_derivations = derivation_count(chart);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace dop
