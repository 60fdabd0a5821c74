#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "dop/grammar.hpp"
#include "dop/model.hpp"

namespace dop {

inline constexpr double kDefaultBeam = 1e-5;
inline constexpr std::size_t kDefaultK = 1000;

struct ChartDiagnostics {
  std::size_t items = 0;  // surviving items, words included
  std::size_t edges = 0;
  std::size_t pruned = 0;
  std::size_t unknown_words = 0;
};

class Chart {
 public:
  struct Edge {
    std::uint32_t rule;
    std::int32_t left;
    std::int32_t right;  // -1 for unary edges
  };
  struct Item {
    SymbolId symbol;
    std::uint32_t start;
    std::uint32_t end;
    double inside = 0.0;  // Viterbi inside probability over surviving edges
    bool axiom = false;   // a word of the sentence
    bool alive = true;
    std::vector<Edge> edges;  // edges whose children survived
    double unpruned = 0.0;    // Viterbi inside as if nothing had been pruned
  };

  Chart(const CompiledGrammar& grammar, std::vector<std::string> sentence);

  const CompiledGrammar& grammar() const noexcept { return *grammar_; }
  const std::vector<std::string>& sentence() const noexcept { return sentence_; }
  const FragmentSource& fragments() const noexcept { return source_; }
  const std::vector<Item>& items() const noexcept { return items_; }
  // Surviving items, children before parents.
  const std::vector<std::int32_t>& order() const noexcept { return order_; }
  const ChartDiagnostics& diagnostics() const noexcept { return diagnostics_; }

  const Rule& rule(std::uint32_t r) const {
    return r < grammar_->rules.size() ? grammar_->rules[r] : local_rules_[r - grammar_->rules.size()];
  }
  bool is_word(SymbolId s) const {
    return s >= grammar_->symbols.size() || grammar_->symbols.kind(s) == SymbolKind::word;
  }
  std::string symbol_name(SymbolId s) const;
  std::optional<std::int32_t> find(std::uint32_t start, std::uint32_t end, SymbolId s) const;
  // Surviving full-span items whose symbol is a start symbol.
  std::vector<std::int32_t> goals() const;

 private:
  friend Chart build_chart(const std::vector<std::string>&, const CompiledGrammar&,
                           const ProbabilityModel&, double);

  struct Cell {
    std::vector<std::int32_t> items;  // surviving items once the cell is pruned
    std::vector<std::int32_t> all;    // pruned ones too
    std::unordered_map<SymbolId, std::int32_t> by_symbol;  // over `all`
  };
  Cell& cell(std::uint32_t i, std::uint32_t j) { return cells_[i * (sentence_.size() + 1) + j]; }
  const Cell& cell(std::uint32_t i, std::uint32_t j) const {
    return cells_[i * (sentence_.size() + 1) + j];
  }
  // `score` is 0 when a child of `e` was pruned; the edge is then only
  // counted towards the unpruned inside.
  void add_edge(std::uint32_t i, std::uint32_t j, SymbolId s, Edge e, double score,
                double unpruned);
  void close_unaries(std::uint32_t i, std::uint32_t j);
  void prune(std::uint32_t i, std::uint32_t j, double beam);

  const CompiledGrammar* grammar_;
  std::vector<std::string> sentence_;
  FragmentSource source_;
  std::vector<Rule> local_rules_;
  std::vector<Item> items_;
  std::vector<Cell> cells_;
  std::vector<std::int32_t> order_;
  ChartDiagnostics diagnostics_;
};

// CKY with a unary closure per cell. After a cell is complete, items whose
// unpruned inside x prior falls below beam times the cell's best complete
// (non-intermediate) item are removed, as are items left without an edge
// over surviving children. Scores that ignore pruning make the surviving sets
// nest as the beam tightens.
Chart build_chart(const std::vector<std::string>& sentence, const CompiledGrammar& grammar,
                  const ProbabilityModel& model, double beam);

// Exact k most probable derivations over the full span, probability
// descending, ties by derivation text. Tied derivations at the k-th score are
// all considered before truncation.
std::vector<Derivation> kbest(const Chart& chart, std::size_t k);

// Number of derivations in the chart; saturates at UINT64_MAX.
std::uint64_t derivation_count(const Chart& chart);

// (start, end, symbol name) of every surviving non-word item.
std::set<std::tuple<std::uint32_t, std::uint32_t, std::string>> item_set(const Chart& chart);

struct ParseResult {
  std::optional<Tree> best_tree;
  std::string best_text;  // bracketed best_tree; empty without a parse
  double best_tree_prob = 0.0;
  std::size_t distinct_trees = 0;
  std::vector<Derivation> kbest;
  ChartDiagnostics diagnostics;
  std::uint64_t chart_derivations = 0;
  double seconds = 0.0;

  // Everything but timing, stable across runs.
  std::string serialize() const;
};

// Groups derivations by the tree they produce and keeps the tree with the
// largest summed probability; ties (within kTieTolerance) go to the smaller
// bracketed text.
ParseResult most_probable_parse(std::span<const Derivation> derivations,
                                const FragmentSource& source);

struct ParseOptions {
  std::size_t k = kDefaultK;
  double beam = kDefaultBeam;
  bool count_derivations = false;
};

ParseResult parse_sentence(const std::vector<std::string>& sentence,
                           const CompiledGrammar& grammar, const ProbabilityModel& model,
                           const ParseOptions& options);

}  // namespace dop
