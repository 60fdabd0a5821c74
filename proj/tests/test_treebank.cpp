#include <doctest.h>

#include <random>
#include <string>

#include "dop/treebank.hpp"
#include "support/toy.hpp"

using namespace dop;

TEST_CASE("bracketed input reads into trees") {
  Corpus c = parse_bracketed("(S (NP john) (VP (V likes) (NP mary)))");
  REQUIRE(c.size() == 1);
  const Tree& t = c[0];
  CHECK(t.label == "S");
  CHECK(t.children.size() == 2);
  CHECK(yield(t) == std::vector<std::string>{"john", "likes", "mary"});
  CHECK(nonterminal_node_count(t) == 5);
  CHECK(height(t) == 3);
}

TEST_CASE("an unlabeled wrapper is removed") {
  Corpus c = parse_bracketed("( (S (X a)) )\n( (S (Y b)) )");
  REQUIRE(c.size() == 2);
  CHECK(c[0].label == "S");
  CHECK(write_bracketed(c[1]) == "(S (Y b))");
}

TEST_CASE("malformed input reports a position") {
  CHECK_THROWS_AS(parse_bracketed("(S (NP a) (VP b"), ParseError);
  try {
    parse_bracketed("(S (NP a))\n(S (NP a) (VP b");
    FAIL("no error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_bracketed("(S a))"), ParseError);
  CHECK_THROWS_AS(parse_bracketed("(S ( a))"), ParseError);
}

TEST_CASE("writing is canonical and round-trips") {
  CHECK(write_bracketed(toy::tree("(NN dog)")) == "(NN dog)");
  Tree t = toy::tree("(S   (NP  john)\n (VP (V likes)\t(NP mary)) )");
  CHECK(write_bracketed(t) == "(S (NP john) (VP (V likes) (NP mary)))");

  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    Tree r = toy::random_tree(rng, {});
    std::string once = write_bracketed(r);
    CHECK(toy::tree(once) == r);
    CHECK(write_bracketed(toy::tree(once)) == once);
  }
}

TEST_CASE("sites are read where the caller says a leaf is a label") {
  auto upper = [](std::string_view s) { return !s.empty() && std::isupper(static_cast<unsigned char>(s[0])); };
  Tree f = parse_tree_with_sites("(S NP (VP (V likes) NP))", upper);
  REQUIRE(f.children.size() == 2);
  CHECK(f.children[0].is_site());
  CHECK(f.children[1].children[0].children[0].terminal);
  CHECK(write_bracketed(f) == "(S NP (VP (V likes) NP))");
}

TEST_CASE("label decorations are stripped") {
  CHECK(strip_coindex(strip_function_tag("NP-SBJ-1")) == "NP");
  CHECK(strip_function_tag("NP-SBJ-1") == "NP");
  CHECK(strip_coindex("NP-SBJ-1") == "NP-SBJ");
  CHECK(strip_coindex("NP=2") == "NP");
  CHECK(strip_function_tag("-NONE-") == "-NONE-");
  CHECK(strip_function_tag("-LRB-") == "-LRB-");
  CHECK(strip_function_tag(",") == ",");
  CHECK(strip_function_tag("PP-LOC") == "PP");
}

TEST_CASE("normalization") {
  NormalizationConfig config;
  SUBCASE("function tags and indices") {
    Tree t = normalize(toy::tree("(S (NP-SBJ-1 (NNP John)) (VP (VBD slept)) (. .))"), config);
    CHECK(write_bracketed(t) == "(S (NP (NNP John)) (VP (VBD slept)) (. .))");
  }
  SUBCASE("quote tokens") {
    Tree t = normalize(toy::tree("(S (`` ``) (NP (NNP John)) ('' '') (VP (VBD slept)))"), config);
    CHECK(write_bracketed(t) == "(S (NP (NNP John)) (VP (VBD slept)))");
  }
  SUBCASE("empty elements remove their emptied ancestors") {
    Tree t = normalize(
        toy::tree("(S (NP-SBJ (-NONE- *T*-1)) (VP (VBD said) (S (-NONE- *T*-1))))"), config);
    CHECK(write_bracketed(t) == "(S (VP (VBD said)))");
  }
  SUBCASE("a tree with nothing left is an error") {
    CHECK_THROWS_AS(normalize(toy::tree("(S (-NONE- *T*))"), config, {"x.mrg", 3}),
                    DegenerateTreeError);
    try {
      normalize(toy::tree("(S (-NONE- *T*))"), config, {"x.mrg", 3});
    } catch (const DegenerateTreeError& e) {
      CHECK(e.source().file == "x.mrg");
      CHECK(e.source().index == 3);
    }
  }
  SUBCASE("flags switch steps off") {
    NormalizationConfig keep;
    keep.strip_function_tags = false;
    keep.strip_coindexing = false;
    keep.remove_quote_tokens = false;
    keep.remove_empty_elements = false;
    Tree raw = toy::tree("(S (`` ``) (NP-SBJ-1 (-NONE- *)) (VP (VBD slept)))");
    CHECK(normalize(raw, keep) == raw);
  }
  SUBCASE("idempotent and never lengthens the yield") {
    Tree raw = toy::tree(
        "(S (`` ``) (S-TPC-1 (NP-SBJ (PRP he)) (VP (VBD slept))) (, ,) ('' '') (NP-SBJ (NNP Mary)) "
        "(VP (VBD said) (S (-NONE- *T*-1))) (. .))");
    Tree once = normalize(raw, config);
    CHECK(normalize(once, config) == once);
    CHECK(yield(once).size() <= yield(raw).size());
  }
}

TEST_CASE("treebank files") {
  Corpus c = read_treebank(std::string(DOP_SOURCE_DIR) + "/data/sample_dev.mrg");
  CHECK(c.size() == 40);
  CHECK(c.source_ids[5].index == 5);
  CHECK_THROWS_AS(read_treebank(std::string(DOP_WORK_DIR) + "/no/such/file.mrg"), Error);
}
