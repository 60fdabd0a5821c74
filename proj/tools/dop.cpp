// Command-line front end: train, parse, eval, sweep, stats.
#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "dop/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Data-oriented parsing toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::size_t workers = 0;
  app.add_option("--config", config_path, "configuration file (key = value lines)");
  app.add_option("--set", overrides, "override one key, e.g. --set beam=1e-5")->take_all();
  app.add_option("--workers", workers, "parallel workers");

  auto* train = app.add_subcommand("train", "extract fragments and estimate a model");
  auto* parse = app.add_subcommand("parse", "parse the test sentences with a trained model");
  auto* eval = app.add_subcommand("eval", "score parser output against gold trees");
  auto* stats = app.add_subcommand("stats", "report fragment table statistics");
  auto* sweep = app.add_subcommand("sweep", "parse and score over a range of restrictions");
  std::string dimension;
  std::string values;
  sweep->add_option("--dimension", dimension, "depth, words, unlexdepth or nonheadwords");
  sweep->add_option("--values", values, "comma-separated bounds; inf for unrestricted");
  for (auto* sub : {train, parse, eval, stats, sweep}) {
    sub->add_option("--config", config_path, "configuration file");
    sub->add_option("--set", overrides, "override one key")->take_all();
    sub->add_option("--workers", workers, "parallel workers");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    dop::RunConfig config = config_path.empty() ? dop::RunConfig{} : dop::RunConfig::load(config_path);
    for (const std::string& o : overrides) config.apply_override(o);
    if (workers) config.set("workers", std::to_string(workers));
    if (!dimension.empty()) config.set("sweep_dimension", dimension);
    if (!values.empty()) config.set("sweep_values", values);

    if (*train) dop::cmd_train(config, std::cout, std::cerr);
    else if (*parse) dop::cmd_parse(config, std::cout, std::cerr);
    else if (*eval) dop::cmd_eval(config, std::cout, std::cerr);
    else if (*stats) dop::cmd_stats(config, std::cout, std::cerr);
    else if (*sweep) dop::cmd_sweep(config, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dop::exit_code_for(e);
  }
  return 0;
}
