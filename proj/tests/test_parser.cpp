#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dop/oracle.hpp"
#include "dop/parser.hpp"
#include "support/toy.hpp"

using namespace dop;

namespace {

const char* kT1 = "(S (NP john) (VP (V likes) (NP mary)))";
const char* kT2 = "(S (NP peter) (VP (V hates) (NP susan)))";

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

struct Toy {
  ProbabilityModel model = toy::train(toy::corpus({kT1, kT2}));
  CompiledGrammar grammar = compile(model);
};

double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

TEST_CASE("a sentence built from fragments of both trees") {
  Toy t;
  auto s = words("mary likes susan");
  Chart chart = build_chart(s, t.grammar, t.model, 0.0);
  auto s_id = t.grammar.symbols.find_label("S");
  REQUIRE(s_id);
  CHECK(chart.find(0, 3, *s_id).has_value());
  CHECK(chart.goals().size() == 1);

  ParseOptions opts;
  opts.beam = 0.0;
  opts.k = 1'000'000;
  ParseResult r = parse_sentence(s, t.grammar, t.model, opts);
  REQUIRE(r.best_tree);
  CHECK(r.best_text == "(S (NP mary) (VP (V likes) (NP susan)))");
  CHECK(r.distinct_trees == 1);

  OracleResult o = brute_force_mpp(s, t.model);
  REQUIRE(o.tree);
  CHECK(write_bracketed(*o.tree) == r.best_text);
  CHECK(relative(o.prob, r.best_tree_prob) <= 1e-12);
  CHECK(o.derivations == r.kbest.size());
}

TEST_CASE("derivations of a corpus tree") {
  Toy t;
  auto s = words("john likes mary");
  Tree t1 = toy::tree(kT1);
  // Each of the four non-root nonterminals is a site or not.
  CHECK(toy::tree_derivations(t1) == 16);
  CHECK(toy::tree_derivations(t1) == (1u << (nonterminal_node_count(t1) - 1)));

  Chart chart = build_chart(s, t.grammar, t.model, 0.0);
  CHECK(derivation_count(chart) == 16);
  auto all = kbest(chart, 1'000'000);
  CHECK(all.size() == 16);
  OracleResult o = brute_force_mpp(s, t.model);
  CHECK(o.derivations == 16);

  double total = 0.0;
  for (const Derivation& d : all) {
    CHECK(write_bracketed(decompile(d, chart.fragments())) == kT1);
    total += d.probability;
  }
  CHECK(relative(total, o.prob) <= 1e-12);
  CHECK(write_bracketed(*o.tree) == kT1);
  CHECK(o.tree_probs.size() == 1);

  // Sorted by probability, ties by text.
  for (std::size_t i = 1; i < all.size(); ++i) {
    CHECK(all[i - 1].probability >= all[i].probability);
    if (all[i - 1].probability == all[i].probability) CHECK(all[i - 1].text < all[i].text);
  }
  // The top derivation is the Viterbi one.
  auto one = kbest(chart, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].text == all[0].text);
  double viterbi = 0.0;
  for (std::int32_t g : chart.goals()) viterbi = std::max(viterbi, chart.items()[g].inside);
  CHECK(relative(one[0].probability, viterbi) <= 1e-12);
}

TEST_CASE("a single small tree gives back its own derivations") {
  ProbabilityModel m = toy::train(toy::corpus({"(S (A a) (B b))"}));
  CompiledGrammar g = compile(m);
  auto all = kbest(build_chart(words("a b"), g, m, 0.0), 100);
  CHECK(all.size() == 4);
  double total = 0.0;
  for (const Derivation& d : all) total += d.probability;
  // 1/4 each for the four S fragments, times 1 for (A a) and (B b).
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unparsable input") {
  Toy t;
  auto s = words("mary mary");
  Chart chart = build_chart(s, t.grammar, t.model, 0.0);
  CHECK(chart.goals().empty());
  CHECK(kbest(chart, 10).empty());
  ParseResult r = parse_sentence(s, t.grammar, t.model, {});
  CHECK_FALSE(r.best_tree);
  CHECK(r.best_tree_prob == 0.0);
  CHECK(r.serialize().rfind("tree\t(NOPARSE)\n", 0) == 0);
  OracleResult o = brute_force_mpp(s, t.model);
  CHECK_FALSE(o.tree);
  CHECK(o.prob == 0.0);
}

TEST_CASE("tree mass adds up over derivations") {
  Toy t;
  FragmentSource src{&t.grammar, {}};
  FragmentId whole = t.grammar.fragment_index.at(kT1);
  FragmentId s = t.grammar.fragment_index.at("(S NP VP)");
  FragmentId np_j = t.grammar.fragment_index.at("(NP john)");
  FragmentId vp = t.grammar.fragment_index.at("(VP (V likes) (NP mary))");
  std::vector<Derivation> ds{{{whole}, 0.25, "a"}, {{s, np_j, vp}, 0.5, "b"}};
  ParseResult r = most_probable_parse(ds, src);
  CHECK(r.best_text == kT1);
  CHECK(r.best_tree_prob == 0.75);
  CHECK(r.distinct_trees == 1);
  CHECK_FALSE(most_probable_parse({}, src).best_tree);

  FragmentId t2 = t.grammar.fragment_index.at(kT2);
  std::vector<Derivation> tie{{{t2}, 0.5, "x"}, {{whole}, 0.5, "y"}};
  // kT1 sorts before kT2 as text.
  CHECK(most_probable_parse(tie, src).best_text == kT1);
}

TEST_CASE("agreement with the enumerator on random corpora") {
  std::mt19937_64 rng(99);
  int compared = 0;
  for (int round = 0; round < 25; ++round) {
    Corpus c = toy::random_corpus(rng, {4, 3, 4});
    ProbabilityModel m = toy::train(c);
    CompiledGrammar g = compile(m);
    for (const Tree& tree : c) {
      auto s = yield(tree);
      OracleResult o;
      try {
        o = brute_force_mpp(s, m, 200'000);
      } catch (const OracleInfeasible&) {
        continue;
      }
      ParseOptions opts;
      opts.beam = 0.0;
      opts.k = o.derivations + 1;
      opts.count_derivations = true;
      ParseResult r = parse_sentence(s, g, m, opts);
      REQUIRE(r.best_tree);
      CHECK(r.chart_derivations == o.derivations);
      CHECK(r.kbest.size() == o.derivations);
      CHECK(r.best_text == write_bracketed(*o.tree));
      CHECK(relative(r.best_tree_prob, o.prob) <= 1e-12);
      ++compared;
    }
  }
  CHECK(compared > 30);
}

TEST_CASE("pruning keeps nested item sets") {
  std::mt19937_64 rng(4);
  for (int round = 0; round < 20; ++round) {
    Corpus c = toy::random_corpus(rng, {});
    ProbabilityModel m = toy::train(c);
    CompiledGrammar g = compile(m);
    for (const Tree& tree : c) {
      auto s = yield(tree);
      auto previous = item_set(build_chart(s, g, m, 0.0));
      for (double beam : {1e-9, 1e-5, 1e-2, 0.5}) {
        Chart chart = build_chart(s, g, m, beam);
        auto now = item_set(chart);
        CHECK(std::includes(previous.begin(), previous.end(), now.begin(), now.end()));
        // Surviving items only ever point at surviving children.
        for (std::int32_t idx : chart.order())
          for (const Chart::Edge& e : chart.items()[idx].edges) {
            CHECK(chart.items()[e.left].alive);
            if (e.right >= 0) CHECK(chart.items()[e.right].alive);
          }
        previous = std::move(now);
      }
    }
  }
}

TEST_CASE("unknown words get tag fragments") {
  Corpus c = toy::corpus({"(S (NP (NNP Acme)) (VP (VBD sold) (NP (NNS cars))))",
                          "(S (NP (NNP Boston)) (VP (VBD bought) (NP (NNS boxes))))"});
  ProbabilityModel m = toy::train(c);
  m.unknown = train_unknown(c, 1);
  CompiledGrammar g = compile(m);
  ParseOptions opts;
  opts.beam = 0.0;
  ParseResult r = parse_sentence(words("Tokyo sold houses"), g, m, opts);
  REQUIRE(r.best_tree);
  CHECK(r.diagnostics.unknown_words == 2);
  CHECK(yield(*r.best_tree) == words("Tokyo sold houses"));
  CHECK(r.best_text == "(S (NP (NNP Tokyo)) (VP (VBD sold) (NP (NNS houses))))");

  // Without an unknown-word model the sentence has no parse.
  ProbabilityModel bare = toy::train(c);
  CompiledGrammar bg = compile(bare);
  CHECK_FALSE(parse_sentence(words("Tokyo sold houses"), bg, bare, opts).best_tree);
}

TEST_CASE("results serialize the same way twice") {
  Toy t;
  ParseResult a = parse_sentence(words("mary hates john"), t.grammar, t.model, {});
  ParseResult b = parse_sentence(words("mary hates john"), t.grammar, t.model, {});
  CHECK(a.serialize() == b.serialize());
  CHECK(a.serialize().find("derivation\t") != std::string::npos);
}
