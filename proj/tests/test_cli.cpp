#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dop/config.hpp"
#include "dop/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dop;

namespace {

const fs::path kWork = fs::path(DOP_WORK_DIR) / "cli_work";

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run dop_cli(const std::string& args, const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  std::string cmd = "cd '" + dir.string() + "' && '" + DOP_CLI_PATH + "' " + args + " > '" +
                    out.string() + "' 2> '" + err.string() + "'";
  int status = std::system(cmd.c_str());
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, read(out), read(err)};
}

// A fresh directory with the two-tree toy corpus and an exhaustive config.
fs::path toy_dir(const std::string& name) {
  fs::path dir = kWork / name;
  fs::remove_all(dir);
  write(dir / "train.mrg",
        "(S (NP john) (VP (V likes) (NP mary)))\n(S (NP peter) (VP (V hates) (NP susan)))\n");
  write(dir / "test.mrg", "(S (NP mary) (VP (V likes) (NP susan)))\n");
  write(dir / "run.cfg",
        "train = train.mrg\ntest = test.mrg\nmodel = out/model.txt\nfragments = out/fragments.txt\n"
        "output = out/parses.txt\nexhaustive_depth = inf\nsample_depths = none\n"
        "unknown_words = false\nbeam = 0\n");
  return dir;
}

}  // namespace

TEST_CASE("config text round-trips") {
  std::istringstream in(
      "# comment\ntrain = a.mrg\nmax_words = 12\nmax_unlex = 6\nbeam = 1e-5\nk = 50\n"
      "sample_depths = 2-5\nsmoothing = good_turing\ncutoffs = 10,40\nworkers = 3\n"
      "sweep_values = 1,2,inf\nunknown_words = no\n");
  RunConfig c = RunConfig::parse(in);
  CHECK(c.train == "a.mrg");
  CHECK(c.restriction.max_frontier_words == 12);
  CHECK(c.restriction.max_unlexicalized_depth == 6);
  CHECK(c.beam == 1e-5);
  CHECK(c.k == 50);
  CHECK(c.sample_min_depth == 2);
  CHECK(c.sample_max_depth == 5);
  CHECK(c.smoothing == Smoothing::good_turing);
  CHECK(c.eval.cutoffs == std::vector<std::size_t>{10, 40});
  CHECK_FALSE(c.unknown_words);
  CHECK(c.sweep_values == std::vector<std::string>{"1", "2", "inf"});

  std::istringstream again(c.serialize());
  CHECK(RunConfig::parse(again).serialize() == c.serialize());
  CHECK(RunConfig{}.serialize() == [] {
    std::istringstream d(RunConfig{}.serialize());
    return RunConfig::parse(d).serialize();
  }());

  c.apply_override("max_words=inf");
  CHECK_FALSE(c.restriction.max_frontier_words.has_value());
  CHECK_THROWS_AS(c.apply_override("no_such_key=1"), ConfigError);
  CHECK_THROWS_AS(c.apply_override("beam"), ConfigError);
  CHECK_THROWS_AS(c.set("k", "many"), ConfigError);
  std::istringstream bad("train a.mrg\n");
  CHECK_THROWS_AS(RunConfig::parse(bad), ConfigError);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(InputError("x")) == 2);
  CHECK(exit_code_for(ScoringError("x")) == 3);
  CHECK(exit_code_for(ExplosionError(10, 5)) == 4);
  CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("toy corpus end to end") {
  fs::path dir = toy_dir("toy");
  Run train = dop_cli("train --config run.cfg", dir);
  REQUIRE(train.code == 0);
  CHECK(train.out.find("occurrences = 34\n") != std::string::npos);
  CHECK(train.out.find("distinct = 31\n") != std::string::npos);

  Run stats = dop_cli("stats --config run.cfg", dir);
  REQUIRE(stats.code == 0);
  CHECK(stats.out.find("[root]\tdistinct\toccurrences\nNP\t4\t4\nS\t18\t20\nV\t2\t2\nVP\t7\t8\n") !=
        std::string::npos);

  Run parse = dop_cli("parse --config run.cfg", dir);
  REQUIRE(parse.code == 0);
  std::string parses = read(dir / "out/parses.txt");
  CHECK(parses.find("\t(S (NP mary) (VP (V likes) (NP susan)))\t") != std::string::npos);

  Run eval = dop_cli("eval --config run.cfg --set report=out/eval.txt", dir);
  REQUIRE(eval.code == 0);
  CHECK(eval.out.find("labeled_precision = 100.00") != std::string::npos);
  CHECK(read(dir / "out/eval.txt") == eval.out);
}

TEST_CASE("a missing training file exits 2 without writing anything") {
  fs::path dir = toy_dir("missing");
  Run r = dop_cli("train --config run.cfg --set train=nowhere.mrg", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out/model.txt"));
  CHECK_FALSE(fs::exists(dir / "out/fragments.txt"));
}

TEST_CASE("a sentence count mismatch exits 3") {
  fs::path dir = toy_dir("mismatch");
  REQUIRE(dop_cli("train --config run.cfg", dir).code == 0);
  REQUIRE(dop_cli("parse --config run.cfg", dir).code == 0);
  write(dir / "gold.mrg",
        "(S (NP mary) (VP (V likes) (NP susan)))\n(S (NP john) (VP (V likes) (NP mary)))\n");
  Run r = dop_cli("eval --config run.cfg --set test=gold.mrg", dir);
  CHECK(r.code == 3);
}

TEST_CASE("bad invocations exit 2") {
  fs::path dir = kWork / "bad";
  CHECK(dop_cli("", dir).code == 2);
  CHECK(dop_cli("frobnicate", dir).code == 2);
  CHECK(dop_cli("train --config nowhere.cfg", dir).code == 2);
  fs::path toy = toy_dir("badkey");
  CHECK(dop_cli("train --config run.cfg --set bogus=1", toy).code == 2);
}

TEST_CASE("depths no tree reaches are skipped") {
  fs::path dir = toy_dir("shallow");
  Run r = dop_cli("train --config run.cfg --set exhaustive_depth=1 --set sample_depths=2-9", dir);
  CHECK(r.code == 0);
  CHECK(r.err.find("no training tree reaches depth 4") != std::string::npos);
}

TEST_CASE("the explosion ceiling exits 4") {
  fs::path dir = toy_dir("explosion");
  Run r = dop_cli("train --config run.cfg --set explosion_ceiling=16", dir);
  CHECK(r.code == 4);
  CHECK_FALSE(fs::exists(dir / "out/model.txt"));
}

TEST_CASE("runs are reproducible") {
  fs::path a = toy_dir("repro_a"), b = toy_dir("repro_b");
  for (const fs::path& d : {a, b}) {
    REQUIRE(dop_cli("train --config run.cfg --set exhaustive_depth=1 --set sample_depths=2-3 "
                    "--set sample_size=200 --set seed=7",
                    d)
                .code == 0);
    REQUIRE(dop_cli("parse --config run.cfg", d).code == 0);
  }
  for (const char* f : {"out/model.txt", "out/fragments.txt", "out/parses.txt"})
    CHECK(read(a / f) == read(b / f));
}
