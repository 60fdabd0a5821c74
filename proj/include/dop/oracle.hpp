#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dop/model.hpp"

namespace dop {

class OracleInfeasible : public Error {
 public:
  using Error::Error;
};

inline constexpr std::uint64_t kDefaultCompositionCeiling = 10'000'000;

struct OracleResult {
  std::optional<Tree> tree;
  double prob = 0.0;
  std::uint64_t derivations = 0;
  std::map<std::string, double> tree_probs;  // bracketed tree -> P(T)
};

// Enumerates every leftmost fragment composition whose yield is `sentence`,
// without a chart. Ties (within kTieTolerance) go to the smaller bracketed text.
OracleResult brute_force_mpp(const std::vector<std::string>& sentence,
                             const ProbabilityModel& model,
                             std::uint64_t ceiling = kDefaultCompositionCeiling);

}  // namespace dop
