#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dop/eval.hpp"
#include "dop/fragments.hpp"
#include "dop/model.hpp"
#include "dop/parser.hpp"
#include "dop/treebank.hpp"

namespace dop {

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Every knob of a run. Config files hold `key = value` lines; `#` starts a
// comment line.
struct RunConfig {
  std::string train;
  std::string dev;
  std::string test;
  std::string model = "model.txt";
  std::string fragments = "fragments.txt";
  std::string output = "parses.txt";
  std::string report;  // eval/sweep/stats copy; empty for stdout only
  std::string head_table;  // empty: the built-in WSJ table

  RestrictionConfig restriction;

  Bound exhaustive_depth = 1;
  int sample_min_depth = 2;
  int sample_max_depth = 14;   // 0 disables sampling
  std::uint64_t sample_size = 400'000;
  std::uint64_t seed = 42;
  std::uint64_t explosion_ceiling = kDefaultExplosionCeiling;

  std::size_t k = kDefaultK;
  double beam = kDefaultBeam;
  Bound max_length;  // longer sentences are not parsed

  Smoothing smoothing = Smoothing::none;
  bool unknown_words = true;
  int rare_threshold = kDefaultRareThreshold;

  NormalizationConfig normalization;
  EvalConfig eval;

  std::size_t workers = 1;

  std::string sweep_dimension = "words";
  std::vector<std::string> sweep_values;
  std::string sweep_set = "test";  // test | dev
  std::size_t sweep_cutoff = 40;
  std::string sweep_cache;  // directory; empty disables the on-disk cache

  void set(const std::string& key, const std::string& value);
  // "key=value"
  void apply_override(const std::string& assignment);

  static RunConfig parse(std::istream& in, const std::string& source = "<config>");
  static RunConfig load(const std::string& path);

  // Canonical `key = value` text; parse(serialize()) gives back the same config.
  std::string serialize() const;
};

}  // namespace dop
