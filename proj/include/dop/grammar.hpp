#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dop/fragments.hpp"
#include "dop/model.hpp"

namespace dop {

class CompileError : public Error {
 public:
  using Error::Error;
};

// Raised by decompile when a step does not fit the leftmost open site.
class CompositionError : public Error {
 public:
  CompositionError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class IncompleteDerivationError : public Error {
 public:
  using Error::Error;
};

using SymbolId = std::uint32_t;
using FragmentId = std::uint32_t;
inline constexpr FragmentId kNoFragment = std::numeric_limits<FragmentId>::max();

enum class SymbolKind : std::uint8_t { label, intermediate, word };

// Labels, per-fragment intermediate symbols and words share one id space but
// never one name space: the word "NP" and the label NP are distinct symbols.
class SymbolTable {
 public:
  SymbolId label(const std::string& name);
  SymbolId word(const std::string& name);
  SymbolId intermediate(FragmentId fragment, std::size_t piece);

  std::optional<SymbolId> find_label(const std::string& name) const;
  std::optional<SymbolId> find_word(const std::string& name) const;

  SymbolKind kind(SymbolId s) const { return kinds_[s]; }
  const std::string& name(SymbolId s) const { return names_[s]; }
  // Owning fragment of an intermediate symbol.
  FragmentId owner(SymbolId s) const { return owners_[s]; }
  std::size_t size() const noexcept { return names_.size(); }

 private:
  SymbolId add(std::string name, SymbolKind kind, FragmentId owner);

  std::vector<std::string> names_;
  std::vector<SymbolKind> kinds_;
  std::vector<FragmentId> owners_;
  std::unordered_map<std::string, SymbolId> labels_;
  std::unordered_map<std::string, SymbolId> words_;
};

struct Rule {
  SymbolId lhs = 0;
  SymbolId rhs[2] = {0, 0};
  std::uint8_t arity = 1;
  FragmentId fragment = kNoFragment;
  bool completing = false;  // topmost rule of the fragment's chain
  double prob = 1.0;
};

struct CompiledGrammar {
  SymbolTable symbols;
  std::vector<Rule> rules;
  std::vector<WeightedFragment> fragments;  // registry, indexed by FragmentId
  std::map<std::string, FragmentId> fragment_index;
  std::set<SymbolId> start_symbols;

  std::unordered_map<SymbolId, std::vector<std::uint32_t>> unary_by_child;
  std::unordered_map<SymbolId, std::vector<std::uint32_t>> binary_by_left;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> binary_by_pair;

  // Labels ordered so that every active unary rule leads from an earlier
  // label to a later one. Unary rules closing a cycle are disabled.
  std::vector<SymbolId> unary_order;
  std::vector<std::uint32_t> unary_rank;  // by symbol; only meaningful for labels
  std::vector<std::uint32_t> disabled_unary;

  // Pruning prior of every symbol: label prior, or the owning fragment's root
  // prior for intermediate symbols. Words are never pruned.
  std::vector<double> symbol_prior;

  static std::uint64_t pair_key(SymbolId a, SymbolId b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }
  bool knows_word(const std::string& w) const { return symbols.find_word(w).has_value(); }

  // `lhs -> rhs... @fragment_id p=prob`, one line per rule.
  void dump(std::ostream& out) const;
};

CompiledGrammar compile(const ProbabilityModel& model);

// Fragment shapes referenced by a derivation: the grammar registry plus
// fragments created for one sentence (unknown words), numbered after it.
struct FragmentSource {
  const CompiledGrammar* grammar = nullptr;
  std::vector<WeightedFragment> local;

  const WeightedFragment& at(FragmentId id) const {
    return id < grammar->fragments.size() ? grammar->fragments[id]
                                          : local[id - grammar->fragments.size()];
  }
};

struct Derivation {
  std::vector<FragmentId> fragments;  // leftmost-substitution order
  double probability = 0.0;
  std::string text;  // fragment keys joined by " + "
};

// Replays leftmost node substitution.
Tree decompile(std::span<const Fragment* const> steps);
Tree decompile(const Derivation& derivation, const FragmentSource& source);

}  // namespace dop
