#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dop/config.hpp"
#include "dop/eval.hpp"
#include "dop/fragments.hpp"
#include "dop/grammar.hpp"
#include "dop/heads.hpp"
#include "dop/model.hpp"
#include "dop/parser.hpp"

namespace dop {

// Missing or unreadable input (exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};

// Process exit code for an exception escaping a command: 2 input error,
// 3 corpus mismatch, 4 resource ceiling, 1 anything else.
int exit_code_for(const std::exception& e);

struct Sentence {
  std::string id;
  std::vector<std::string> words;
};

// Reads a treebank, normalizes it and drops trees that normalize to nothing
// (with a warning on `log`).
Corpus load_corpus(const std::string& path, const NormalizationConfig& config, std::ostream& log);

// Sentences from a treebank (their yields) or from a file with one
// whitespace-tokenized sentence per line. Blank lines are skipped.
std::vector<Sentence> load_sentences(const std::string& path, const NormalizationConfig& config,
                                     std::ostream& log);

HeadTable head_table_for(const RunConfig& config);

// Exhaustive extraction up to config.exhaustive_depth plus random samples for
// the configured depths that lie above it. No restriction is applied.
FragmentTable extract_base_table(const Corpus& corpus, const RunConfig& config, std::ostream& log);

// Filter, estimate, optionally smooth, and attach the unknown-word model.
ProbabilityModel build_model(const FragmentTable& base, const RunConfig& config,
                             const RestrictionConfig& restriction, const Corpus& train);

struct ParseRecord {
  std::string id;
  std::optional<std::string> tree;  // bracketed; nullopt for NOPARSE
  double prob = 0.0;
  std::size_t derivations = 0;
};

// `id TAB tree TAB prob TAB derivations`, (NOPARSE) for failures.
std::string format_record(const ParseRecord& r);

// Parses every sentence; output order follows input order for any worker count.
std::vector<ParseRecord> parse_all(const std::vector<Sentence>& sentences,
                                   const CompiledGrammar& grammar, const ProbabilityModel& model,
                                   const RunConfig& config, std::ostream& log);

// Trees of a parser output file or of a bracketed treebank; nullopt for NOPARSE.
std::vector<std::optional<Tree>> load_test_trees(const std::string& path,
                                                 const NormalizationConfig& config,
                                                 std::ostream& log);

std::string stats_report(const FragmentTable& table, const HeadTable& heads);

// Restriction for one sweep value on top of `base`, plus its row label.
RestrictionConfig sweep_restriction(const RestrictionConfig& base, const std::string& dimension,
                                    const std::string& value);
std::string sweep_row_label(const std::string& dimension, const std::string& value);
std::string sweep_header(const std::string& dimension);

void cmd_train(const RunConfig& config, std::ostream& out, std::ostream& log);
void cmd_parse(const RunConfig& config, std::ostream& out, std::ostream& log);
EvalReport cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& log);
void cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& log);
void cmd_stats(const RunConfig& config, std::ostream& out, std::ostream& log);

}  // namespace dop
