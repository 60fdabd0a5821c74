#include "dop/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace dop {

namespace {

void walk(const Tree& t, const std::set<std::string>& punct, std::size_t& pos,
          BracketMultiset& out) {
  if (t.terminal) {
    ++pos;
    return;
  }
  if (t.is_preterminal()) {
    if (!punct.count(t.label)) ++pos;
    return;
  }
  const std::size_t start = pos;
  for (const Tree& c : t.children) walk(c, punct, pos, out);
  if (pos > start) ++out[{t.label, start, pos}];
}

std::vector<std::string> visible_yield(const Tree& t, const std::set<std::string>& punct) {
  std::vector<std::string> out;
  auto rec = [&](auto&& self, const Tree& n) -> void {
    if (n.terminal) {
      out.push_back(n.label);
    } else if (n.is_preterminal()) {
      if (!punct.count(n.label)) out.push_back(n.children.front().label);
    } else {
      for (const Tree& c : n.children) self(self, c);
    }
  };
  rec(rec, t);
  return out;
}

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

BracketMultiset extract_brackets(const Tree& tree, const std::set<std::string>& punctuation_tags) {
  BracketMultiset out;
  std::size_t pos = 0;
  walk(tree, punctuation_tags, pos, out);
  return out;
}

std::size_t bracket_count(const BracketMultiset& b) {
  std::size_t n = 0;
  for (const auto& [br, c] : b) n += c;
  return n;
}

std::size_t matched_count(const BracketMultiset& gold, const BracketMultiset& test) {
  std::size_t n = 0;
  for (const auto& [br, c] : test) {
    auto it = gold.find(br);
    if (it != gold.end()) n += std::min(c, it->second);
  }
  return n;
}

double CutoffReport::precision() const { return percent(matched, test_brackets); }
double CutoffReport::recall() const { return percent(matched, gold_brackets); }
double CutoffReport::f1() const {
  double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}
double CutoffReport::exact_match() const { return percent(exact, sentences); }

const CutoffReport& EvalReport::block(std::optional<std::size_t> max_length) const {
  for (const CutoffReport& b : blocks)
    if (b.max_length == max_length) return b;
  throw Error("no report block for that length cutoff");
}

void EvalReport::write(std::ostream& out) const {
  auto fixed = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  bool first = true;
  for (const CutoffReport& b : blocks) {
    if (!first) out << '\n';
    first = false;
    out << (b.max_length ? "[<=" + std::to_string(*b.max_length) + "]" : std::string("[all]"))
        << '\n';
    out << "sentences = " << b.sentences << '\n';
    out << "skipped = " << b.skipped << '\n';
    out << "noparse = " << b.noparse << '\n';
    out << "gold_brackets = " << b.gold_brackets << '\n';
    out << "test_brackets = " << b.test_brackets << '\n';
    out << "matched_brackets = " << b.matched << '\n';
    out << "labeled_precision = " << fixed(b.precision()) << '\n';
    out << "labeled_recall = " << fixed(b.recall()) << '\n';
    out << "f1 = " << fixed(b.f1()) << '\n';
    out << "exact_match = " << fixed(b.exact_match()) << '\n';
  }
}

EvalReport score(const std::vector<Tree>& gold, const std::vector<std::optional<Tree>>& test,
                 const EvalConfig& config) {
  if (gold.size() != test.size())
    throw ScoringError("gold has " + std::to_string(gold.size()) + " sentences, test has " +
                       std::to_string(test.size()));
  EvalReport report;
  std::vector<std::size_t> cutoffs = config.cutoffs;
  std::sort(cutoffs.begin(), cutoffs.end());
  cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
  for (std::size_t c : cutoffs) report.blocks.push_back({c});
  report.blocks.push_back({std::nullopt});

  const auto& punct = config.punctuation_tags;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::size_t length = yield(gold[i]).size();
    BracketMultiset g = extract_brackets(gold[i], punct);
    BracketMultiset t;
    bool skip = false;
    if (test[i]) {
      skip = visible_yield(gold[i], punct) != visible_yield(*test[i], punct);
      if (!skip) t = extract_brackets(*test[i], punct);
    }
    const std::size_t m = matched_count(g, t);
    for (CutoffReport& b : report.blocks) {
      if (b.max_length && length > *b.max_length) continue;
      if (skip) {
        ++b.skipped;
        continue;
      }
      ++b.sentences;
      if (!test[i]) ++b.noparse;
      b.gold_brackets += bracket_count(g);
      b.test_brackets += bracket_count(t);
      b.matched += m;
      if (test[i] && g == t) ++b.exact;
    }
  }
  return report;
}

std::string bracket_diff(const Tree& gold, const std::optional<Tree>& test,
                         const std::set<std::string>& punctuation_tags) {
  BracketMultiset g = extract_brackets(gold, punctuation_tags);
  BracketMultiset t;
  if (test) t = extract_brackets(*test, punctuation_tags);
  std::ostringstream out;
  auto line = [&](char sign, const Bracket& b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
      out << sign << ' ' << b.label << ' ' << b.start << ' ' << b.end << '\n';
  };
  for (const auto& [b, c] : g) {
    auto it = t.find(b);
    std::size_t have = it == t.end() ? 0 : it->second;
    if (c > have) line('-', b, c - have);
  }
  for (const auto& [b, c] : t) {
    auto it = g.find(b);
    std::size_t have = it == g.end() ? 0 : it->second;
    if (c > have) line('+', b, c - have);
  }
  return out.str();
}

}  // namespace dop
