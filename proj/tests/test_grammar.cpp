#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dop/grammar.hpp"
#include "support/toy.hpp"

using namespace dop;

namespace {

const char* kT1 = "(S (NP john) (VP (V likes) (NP mary)))";
const char* kT2 = "(S (NP peter) (VP (V hates) (NP susan)))";

const std::set<std::string> kLabels{"S", "NP", "VP", "V"};

Fragment frag(const std::string& key) { return fragment_from_key(key, kLabels); }

ProbabilityModel single(const std::string& key, double p) {
  ProbabilityModel m;
  m.fragments.push_back({frag(key), p});
  m.index[key] = 0;
  m.label_prior = {{"S", 1.0}};
  m.start_labels = {"S"};
  return m;
}

// Frontier of a fragment's compiled chain, read back off the rules.
std::vector<std::string> chain_frontier(const CompiledGrammar& g, FragmentId fid) {
  std::vector<std::string> out;
  for (const Rule& r : g.rules) {
    if (r.fragment != fid) continue;
    for (int i = 0; i < r.arity; ++i)
      if (g.symbols.kind(r.rhs[i]) != SymbolKind::intermediate) out.push_back(g.symbols.name(r.rhs[i]));
  }
  return out;
}

std::vector<std::string> frontier_of(const Tree& t, bool root = true) {
  if (t.terminal || (t.is_site() && !root)) return {t.label};
  std::vector<std::string> out;
  for (const Tree& c : t.children)
    for (std::string& s : frontier_of(c, false)) out.push_back(std::move(s));
  return out;
}

}  // namespace

TEST_CASE("a lexicalized fragment binarizes left-branching") {
  CompiledGrammar g = compile(single("(S (NP john) (VP V NP))", 0.3));
  REQUIRE(g.rules.size() == 2);
  const Rule& low = g.rules[0];
  const Rule& top = g.rules[1];
  CHECK(g.symbols.kind(low.lhs) == SymbolKind::intermediate);
  CHECK(g.symbols.owner(low.lhs) == 0);
  CHECK(g.symbols.name(low.rhs[0]) == "john");
  CHECK(g.symbols.kind(low.rhs[0]) == SymbolKind::word);
  CHECK(g.symbols.name(low.rhs[1]) == "V");
  CHECK(low.prob == 1.0);
  CHECK_FALSE(low.completing);
  CHECK(g.symbols.name(top.lhs) == "S");
  CHECK(top.rhs[0] == low.lhs);
  CHECK(g.symbols.name(top.rhs[1]) == "NP");
  CHECK(top.prob == 0.3);
  CHECK(top.completing);

  std::ostringstream dump;
  g.dump(dump);
  CHECK(dump.str() == "@0.1 -> \"john\" V @0 p=1\nS -> @0.1 NP @0 p=0.29999999999999999\n");
}

TEST_CASE("a one-word fragment is a unary lexical rule") {
  CompiledGrammar g = compile(single("(NP mary)", 0.25));
  REQUIRE(g.rules.size() == 1);
  CHECK(g.rules[0].arity == 1);
  CHECK(g.symbols.name(g.rules[0].lhs) == "NP");
  CHECK(g.symbols.name(g.rules[0].rhs[0]) == "mary");
  CHECK(g.rules[0].prob == 0.25);
}

TEST_CASE("words and labels never share a symbol") {
  ProbabilityModel m = single("(S (NP NP) VP)", 1.0);
  m.fragments[0].fragment = fragment_from_key("(S (NP NP) VP)", "ws");
  CompiledGrammar g = compile(m);
  auto label = g.symbols.find_label("NP");
  auto word = g.symbols.find_word("NP");
  REQUIRE(word.has_value());
  CHECK_FALSE(label.has_value());
  CHECK(g.knows_word("NP"));
  CHECK(g.symbols.kind(*word) == SymbolKind::word);
}

TEST_CASE("every toy fragment compiles to a chain with its own frontier") {
  ProbabilityModel m = toy::train(toy::corpus({kT1, kT2}));
  CompiledGrammar g = compile(m);
  REQUIRE(g.fragments.size() == m.fragments.size());
  for (FragmentId fid = 0; fid < g.fragments.size(); ++fid) {
    const Fragment& f = g.fragments[fid].fragment;
    CHECK(chain_frontier(g, fid) == frontier_of(f.shape));
    double product = 1.0;
    int completing = 0;
    for (const Rule& r : g.rules)
      if (r.fragment == fid) {
        product *= r.prob;
        completing += r.completing;
        if (r.completing) CHECK(g.symbols.name(r.lhs) == f.root());
        // Intermediate symbols stay inside their own fragment.
        for (int i = 0; i < r.arity; ++i)
          if (g.symbols.kind(r.rhs[i]) == SymbolKind::intermediate)
            CHECK(g.symbols.owner(r.rhs[i]) == fid);
      }
    CHECK(completing == 1);
    CHECK(product == doctest::Approx(m.prob(f.key)).epsilon(1e-15));
    CHECK(g.fragment_index.at(f.key) == fid);
  }
}

TEST_CASE("single-fragment derivations decompile to their fragment") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 20; ++i) {
    Corpus c = toy::random_corpus(rng, {});
    CompiledGrammar g = compile(toy::train(c));
    FragmentSource src{&g, {}};
    for (FragmentId fid = 0; fid < g.fragments.size(); ++fid) {
      const Fragment& f = g.fragments[fid].fragment;
      if (frontier_of(f.shape) != yield(f.shape)) continue;  // has sites
      Derivation d{{fid}, g.fragments[fid].prob, f.key};
      CHECK(decompile(d, src) == f.shape);
    }
  }
}

TEST_CASE("leftmost substitution") {
  Fragment a = frag("(S NP (VP V NP))"), b = frag("(NP mary)"), c = frag("(V likes)"),
           d = frag("(NP susan)");
  std::vector<const Fragment*> steps{&a, &b, &c, &d};
  CHECK(write_bracketed(decompile(steps)) == "(S (NP mary) (VP (V likes) (NP susan)))");

  Fragment whole = frag(kT1);
  std::vector<const Fragment*> one{&whole};
  CHECK(write_bracketed(decompile(one)) == kT1);

  Fragment s = frag("(S NP VP)"), vp = frag("(VP (V likes) NP)");
  std::vector<const Fragment*> wrong{&s, &vp};
  CHECK_THROWS_AS(decompile(wrong), CompositionError);
  try {
    decompile(wrong);
  } catch (const CompositionError& e) {
    CHECK(e.step() == 1);
    CHECK(std::string(e.what()).find("leftmost open site is NP, fragment root is VP") !=
          std::string::npos);
  }

  std::vector<const Fragment*> open{&s, &b};
  CHECK_THROWS_AS(decompile(open), IncompleteDerivationError);
  std::vector<const Fragment*> extra{&whole, &b};
  CHECK_THROWS_AS(decompile(extra), CompositionError);
}

TEST_CASE("unary cycles are broken") {
  ProbabilityModel m;
  for (const char* key : {"(S X)", "(X Y)", "(Y X)", "(Y (A a))", "(X (A a))", "(A a)"})
    m.fragments.push_back({fragment_from_key(key, std::set<std::string>{"S", "X", "Y", "A"}), 0.5});
  for (std::size_t i = 0; i < m.fragments.size(); ++i) m.index[m.fragments[i].fragment.key] = i;
  m.label_prior = {{"S", 0.25}, {"X", 0.25}, {"Y", 0.25}, {"A", 0.25}};
  m.start_labels = {"S"};
  CompiledGrammar g = compile(m);
  CHECK(g.disabled_unary.size() == 1);
  // Every active unary label rule goes forward in the order.
  for (std::uint32_t r = 0; r < g.rules.size(); ++r) {
    const Rule& rule = g.rules[r];
    if (rule.arity != 1 || g.symbols.kind(rule.rhs[0]) != SymbolKind::label) continue;
    bool disabled = std::find(g.disabled_unary.begin(), g.disabled_unary.end(), r) !=
                    g.disabled_unary.end();
    if (!disabled) CHECK(g.unary_rank[rule.rhs[0]] < g.unary_rank[rule.lhs]);
  }
}

TEST_CASE("priors of intermediate symbols come from the fragment root") {
  ProbabilityModel m = toy::train(toy::corpus({kT1, kT2}));
  CompiledGrammar g = compile(m);
  for (SymbolId s = 0; s < g.symbols.size(); ++s) {
    switch (g.symbols.kind(s)) {
      case SymbolKind::label:
        CHECK(g.symbol_prior[s] == m.prior(g.symbols.name(s)));
        break;
      case SymbolKind::intermediate:
        CHECK(g.symbol_prior[s] == m.prior(g.fragments[g.symbols.owner(s)].fragment.root()));
        break;
      case SymbolKind::word:
        CHECK(g.symbol_prior[s] == 1.0);
        break;
    }
  }
}
