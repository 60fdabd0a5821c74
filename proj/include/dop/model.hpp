#pragma once

#include <algorithm>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dop/fragments.hpp"
#include "dop/treebank.hpp"

namespace dop {

class EstimationError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kDefaultRareThreshold = 5;

struct WordFeatures {
  std::string suffix;  // lowercased, up to three characters
  bool capitalized = false;
  bool hyphen = false;
  bool digit = false;

  // "cap=1,hyphen=0,digit=0,suffix=ing"
  std::string bundle() const;
};

// A capital letter on the first word of a sentence only counts when a hyphen
// or digit also fires.
WordFeatures word_features(std::string_view word, bool sentence_initial,
                           std::size_t suffix_length);

// P(preterminal | word features), trained on rare tokens with add-one
// smoothing over the preterminal set.
struct UnknownWordModel {
  int rare_threshold = kDefaultRareThreshold;
  std::vector<std::string> tags;
  std::map<std::string, std::map<std::string, double>> distributions;  // bundle -> tag -> P

  // Uses the longest suffix whose bundle was seen in training; uniform over
  // the tag set when no bundle was seen.
  std::map<std::string, double> distribution(std::string_view word, bool sentence_initial) const;
};

UnknownWordModel train_unknown(const Corpus& corpus, int rare_threshold = kDefaultRareThreshold);

// Depth-1 fragments (TAG word) weighted by P(TAG | features). Callers check the
// lexicon first; this is only meant for words no fragment contains.
std::vector<std::pair<Fragment, double>> unknown_word_fragments(const std::string& word,
                                                                bool sentence_initial,
                                                                const UnknownWordModel& model);

enum class Smoothing { none, good_turing };

struct WeightedFragment {
  Fragment fragment;
  double prob = 0.0;
};

struct ProbabilityModel {
  std::vector<WeightedFragment> fragments;  // key order
  std::map<std::string, std::size_t> index;
  std::map<std::string, double> label_prior;
  std::map<std::string, double> unseen_mass;  // per root, Good-Turing only
  std::set<std::string> smoothing_fallback;   // roots left unsmoothed
  Smoothing smoothing = Smoothing::none;
  std::set<std::string> start_labels;
  std::optional<UnknownWordModel> unknown;

  // 0 for keys the model does not contain.
  double prob(const std::string& key) const;
  double prior(const std::string& label) const;
  // Sum of P(t) over fragments with each root.
  std::map<std::string, double> root_mass() const;
  std::set<std::string> nonterminals() const;

  // Line-oriented text, lines sorted lexicographically:
  //   prob TAB key
  //   #prior TAB label TAB prob
  //   #unk TAB features TAB tag TAB prob
  // plus #start, #nonterminals, #smoothing, #unseen, #fallback, #unk-tag and
  // #unk-threshold records.
  void write(std::ostream& out) const;
  static ProbabilityModel read(std::istream& in);
};

// Relative frequency: P(t) = |t| / sum of |t'| over t' with the same root.
// Priors are label frequencies over training-tree nodes.
ProbabilityModel estimate(const FragmentTable& table);

// Per-root simple Good-Turing: adjusted counts r* = r (1 + 1/r)^(b+1) from a
// log-linear fit of the frequency-of-frequencies, rescaled so the seen mass is
// 1 - N1/N. Roots where the fit is degenerate keep their unsmoothed values.
ProbabilityModel smooth_good_turing(const ProbabilityModel& model, const FragmentTable& table);

std::string format_probability(double p);

// Tree masses within this relative distance of the best count as tied;
// summation order alone moves the last bits of a sum.
inline constexpr double kTieTolerance = 1e-12;

// Index of the first entry whose value is tied with the maximum; -1 if empty.
template <typename Range, typename Value>
std::ptrdiff_t first_near_max(const Range& range, Value value) {
  double best = 0.0;
  bool any = false;
  for (const auto& e : range) {
    best = any ? std::max(best, value(e)) : value(e);
    any = true;
  }
  std::ptrdiff_t i = 0;
  for (const auto& e : range) {
    if (value(e) >= best * (1.0 - kTieTolerance)) return i;
    ++i;
  }
  return -1;
}

}  // namespace dop
