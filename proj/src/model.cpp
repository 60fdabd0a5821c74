#include "dop/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace dop {

std::string format_probability(double p) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", p);
  return buf;
}

namespace {

// Byte offset where the last `n` UTF-8 code points of `word` start.
std::size_t suffix_start(std::string_view word, std::size_t n) {
  std::size_t pos = word.size();
  while (n > 0 && pos > 0) {
    --pos;
    while (pos > 0 && (static_cast<unsigned char>(word[pos]) & 0xC0) == 0x80) --pos;
    --n;
  }
  return pos;
}

std::size_t code_points(std::string_view word) {
  std::size_t n = 0;
  for (unsigned char c : word) n += (c & 0xC0) != 0x80;
  return n;
}

}  // namespace

std::string WordFeatures::bundle() const {
  std::string out = "cap=";
  out += capitalized ? '1' : '0';
  out += ",hyphen=";
  out += hyphen ? '1' : '0';
  out += ",digit=";
  out += digit ? '1' : '0';
  out += ",suffix=";
  out += suffix;
  return out;
}

WordFeatures word_features(std::string_view word, bool sentence_initial,
                           std::size_t suffix_length) {
  WordFeatures f;
  f.hyphen = word.find('-') != std::string_view::npos;
  f.digit = std::any_of(word.begin(), word.end(),
                        [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  bool upper = !word.empty() && std::isupper(static_cast<unsigned char>(word.front()));
  f.capitalized = upper && (!sentence_initial || f.hyphen || f.digit);
  for (std::size_t i = suffix_start(word, suffix_length); i < word.size(); ++i)
    f.suffix += static_cast<char>(std::tolower(static_cast<unsigned char>(word[i])));
  return f;
}

std::map<std::string, double> UnknownWordModel::distribution(std::string_view word,
                                                             bool sentence_initial) const {
  for (std::size_t len = std::min<std::size_t>(3, code_points(word)) + 1; len-- > 0;) {
    auto it = distributions.find(word_features(word, sentence_initial, len).bundle());
    if (it != distributions.end()) return it->second;
  }
  std::map<std::string, double> uniform;
  for (const std::string& t : tags) uniform[t] = 1.0 / static_cast<double>(tags.size());
  return uniform;
}

namespace {

struct Token {
  std::string word;
  std::string tag;  // empty when the word is not under a preterminal
  bool initial = false;
};

void collect_tokens(const Tree& t, std::vector<Token>& out, std::set<std::string>& tags) {
  if (t.terminal) {
    out.push_back({t.label, "", out.empty()});
    return;
  }
  if (t.is_preterminal()) {
    tags.insert(t.label);
    out.push_back({t.children.front().label, t.label, out.empty()});
    return;
  }
  for (const Tree& c : t.children) collect_tokens(c, out, tags);
}

}  // namespace

UnknownWordModel train_unknown(const Corpus& corpus, int rare_threshold) {
  if (rare_threshold < 1) throw TrainingError("rare word threshold must be >= 1");
  std::vector<std::vector<Token>> sentences;
  std::set<std::string> tagset;
  std::map<std::string, std::uint64_t> freq;
  for (const Tree& t : corpus) {
    std::vector<Token> tokens;
    collect_tokens(t, tokens, tagset);
    for (const Token& tok : tokens) ++freq[tok.word];
    sentences.push_back(std::move(tokens));
  }

  std::map<std::string, std::map<std::string, std::uint64_t>> counts;
  std::size_t rare = 0;
  for (const auto& tokens : sentences) {
    for (const Token& tok : tokens) {
      if (tok.tag.empty() || freq[tok.word] > static_cast<std::uint64_t>(rare_threshold)) continue;
      ++rare;
      std::size_t max_len = std::min<std::size_t>(3, code_points(tok.word));
      for (std::size_t len = 0; len <= max_len; ++len)
        ++counts[word_features(tok.word, tok.initial, len).bundle()][tok.tag];
    }
  }
  if (rare == 0)
    throw TrainingError("no token occurs at most " + std::to_string(rare_threshold) +
                        " times; raise the rare word threshold");

  UnknownWordModel model;
  model.rare_threshold = rare_threshold;
  model.tags.assign(tagset.begin(), tagset.end());
  const double k = static_cast<double>(model.tags.size());
  for (const auto& [bundle, by_tag] : counts) {
    std::uint64_t total = 0;
    for (const auto& [tag, n] : by_tag) total += n;
    auto& dist = model.distributions[bundle];
    for (const std::string& tag : model.tags) {
      auto it = by_tag.find(tag);
      double c = it == by_tag.end() ? 0.0 : static_cast<double>(it->second);
      dist[tag] = (c + 1.0) / (static_cast<double>(total) + k);
    }
  }
  return model;
}

std::vector<std::pair<Fragment, double>> unknown_word_fragments(const std::string& word,
                                                                bool sentence_initial,
                                                                const UnknownWordModel& model) {
  std::vector<std::pair<Fragment, double>> out;
  for (const auto& [tag, p] : model.distribution(word, sentence_initial)) {
    if (p <= 0.0) continue;
    out.emplace_back(Fragment::from_shape(Tree::node(tag, {Tree::word(word)})), p);
  }
  return out;
}

double ProbabilityModel::prob(const std::string& key) const {
  auto it = index.find(key);
  return it == index.end() ? 0.0 : fragments[it->second].prob;
}

double ProbabilityModel::prior(const std::string& label) const {
  auto it = label_prior.find(label);
  return it == label_prior.end() ? 0.0 : it->second;
}

std::map<std::string, double> ProbabilityModel::root_mass() const {
  std::map<std::string, double> mass;
  for (const WeightedFragment& wf : fragments) mass[wf.fragment.root()] += wf.prob;
  return mass;
}

namespace {

void collect_nonterminals(const Tree& t, std::set<std::string>& out) {
  if (t.terminal) return;
  out.insert(t.label);
  for (const Tree& c : t.children) collect_nonterminals(c, out);
}

void rebuild_index(ProbabilityModel& m) {
  m.index.clear();
  for (std::size_t i = 0; i < m.fragments.size(); ++i) m.index[m.fragments[i].fragment.key] = i;
}

}  // namespace

std::set<std::string> ProbabilityModel::nonterminals() const {
  std::set<std::string> out;
  for (const WeightedFragment& wf : fragments) collect_nonterminals(wf.fragment.shape, out);
  for (const auto& [label, p] : label_prior) out.insert(label);
  return out;
}

ProbabilityModel estimate(const FragmentTable& table) {
  if (table.empty()) throw EstimationError("cannot estimate a model from an empty fragment table");
  ProbabilityModel m;
  for (const auto& [key, e] : table.entries()) {
    std::uint64_t total = table.root_totals().at(e.fragment.root());
    if (total == 0) throw EstimationError("root total of " + e.fragment.root() + " is zero");
    m.fragments.push_back(
        {e.fragment, static_cast<double>(e.count) / static_cast<double>(total)});
  }
  rebuild_index(m);

  std::map<std::string, std::uint64_t> nodes = table.corpus.node_counts;
  if (nodes.empty()) {
    // No corpus statistics: each depth-1 fragment occurrence is one node.
    for (const auto& [key, e] : table.entries())
      if (e.fragment.depth == 1) nodes[e.fragment.root()] += e.count;
    if (nodes.empty()) nodes.insert(table.root_totals().begin(), table.root_totals().end());
  }
  std::uint64_t all = 0;
  for (const auto& [label, n] : nodes) all += n;
  for (const auto& [label, n] : nodes)
    m.label_prior[label] = static_cast<double>(n) / static_cast<double>(all);

  m.start_labels = table.corpus.start_labels;
  if (m.start_labels.empty())
    for (const auto& [root, total] : table.root_totals()) m.start_labels.insert(root);
  return m;
}

ProbabilityModel smooth_good_turing(const ProbabilityModel& model, const FragmentTable& table) {
  ProbabilityModel out = model;
  out.smoothing = Smoothing::good_turing;
  out.unseen_mass.clear();
  out.smoothing_fallback.clear();

  std::map<std::string, std::map<std::uint64_t, std::uint64_t>> freq_of_freq;
  for (const auto& [key, e] : table.entries()) ++freq_of_freq[e.fragment.root()][e.count];

  std::map<std::string, std::map<std::uint64_t, double>> adjusted;  // root -> r -> P
  for (const auto& [root, nr] : freq_of_freq) {
    const std::uint64_t n_total = table.root_totals().at(root);
    auto it1 = nr.find(1);
    const std::uint64_t n1 = it1 == nr.end() ? 0 : it1->second;
    if (n1 == 0 || n1 == n_total || nr.size() < 2) {
      out.smoothing_fallback.insert(root);
      continue;
    }
    // Gale & Sampson averaging: Z_r = N_r / (0.5 (r_next - r_prev)).
    std::vector<std::pair<double, double>> pts;
    std::vector<std::uint64_t> rs;
    for (const auto& [r, n] : nr) rs.push_back(r);
    for (std::size_t j = 0; j < rs.size(); ++j) {
      double prev = j == 0 ? 0.0 : static_cast<double>(rs[j - 1]);
      double width = j + 1 < rs.size() ? 0.5 * (static_cast<double>(rs[j + 1]) - prev)
                                       : static_cast<double>(rs[j]) - prev;
      double z = static_cast<double>(nr.at(rs[j])) / width;
      pts.emplace_back(std::log(static_cast<double>(rs[j])), std::log(z));
    }
    double mx = 0, my = 0;
    for (auto [x, y] : pts) {
      mx += x;
      my += y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0, sxx = 0;
    for (auto [x, y] : pts) {
      sxy += (x - mx) * (y - my);
      sxx += (x - mx) * (x - mx);
    }
    double slope = sxy / sxx;
    if (!(slope < -1.0)) {
      out.smoothing_fallback.insert(root);
      continue;
    }
    double weight = 0.0;
    std::map<std::uint64_t, double> rstar;
    for (const auto& [r, n] : nr) {
      double rd = static_cast<double>(r);
      rstar[r] = rd * std::pow(1.0 + 1.0 / rd, slope + 1.0);
      weight += static_cast<double>(n) * rstar[r];
    }
    double seen = 1.0 - static_cast<double>(n1) / static_cast<double>(n_total);
    auto& probs = adjusted[root];
    for (const auto& [r, v] : rstar) probs[r] = seen * v / weight;
    out.unseen_mass[root] = 1.0 - seen;
  }

  for (WeightedFragment& wf : out.fragments) {
    auto it = adjusted.find(wf.fragment.root());
    if (it == adjusted.end()) continue;
    wf.prob = it->second.at(table.count(wf.fragment.key));
  }
  return out;
}

void ProbabilityModel::write(std::ostream& out) const {
  std::vector<std::string> lines;
  const std::set<std::string> labels = nonterminals();
  for (const WeightedFragment& wf : fragments) {
    std::string pattern = key_pattern(wf.fragment, labels);
    lines.push_back(format_probability(wf.prob) + '\t' + wf.fragment.key +
                    (pattern.empty() ? "" : '\t' + pattern));
  }
  for (const auto& [label, p] : label_prior)
    lines.push_back("#prior\t" + label + '\t' + format_probability(p));
  for (const auto& [label, p] : unseen_mass)
    lines.push_back("#unseen\t" + label + '\t' + format_probability(p));
  for (const std::string& label : smoothing_fallback) lines.push_back("#fallback\t" + label);
  for (const std::string& label : start_labels) lines.push_back("#start\t" + label);
  lines.push_back(std::string("#smoothing\t") +
                  (smoothing == Smoothing::none ? "none" : "good_turing"));
  std::string nts = "#nonterminals";
  for (const std::string& l : nonterminals()) nts += " " + l;
  lines.push_back(nts);
  if (unknown) {
    lines.push_back("#unk-threshold\t" + std::to_string(unknown->rare_threshold));
    for (const std::string& tag : unknown->tags) lines.push_back("#unk-tag\t" + tag);
    for (const auto& [bundle, dist] : unknown->distributions)
      for (const auto& [tag, p] : dist)
        lines.push_back("#unk\t" + bundle + '\t' + tag + '\t' + format_probability(p));
  }
  std::sort(lines.begin(), lines.end());
  for (const std::string& l : lines) out << l << '\n';
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) return out;
    start = tab + 1;
  }
}

}  // namespace

ProbabilityModel ProbabilityModel::read(std::istream& in) {
  ProbabilityModel m;
  std::set<std::string> nts;
  struct Record {
    double prob;
    std::string key, pattern;
  };
  std::vector<Record> records;
  UnknownWordModel unk;
  bool has_unknown = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_tabs(line);
    auto need = [&](std::size_t n) {
      if (f.size() != n) throw Error("model line " + std::to_string(lineno) + ": malformed");
    };
    const std::string& kind = f[0];
    if (kind.rfind("#nonterminals", 0) == 0) {
      std::istringstream fields(line.substr(13));
      for (std::string l; fields >> l;) nts.insert(l);
    } else if (kind == "#prior") {
      need(3);
      m.label_prior[f[1]] = std::stod(f[2]);
    } else if (kind == "#unseen") {
      need(3);
      m.unseen_mass[f[1]] = std::stod(f[2]);
    } else if (kind == "#fallback") {
      need(2);
      m.smoothing_fallback.insert(f[1]);
    } else if (kind == "#start") {
      need(2);
      m.start_labels.insert(f[1]);
    } else if (kind == "#smoothing") {
      need(2);
      m.smoothing = f[1] == "good_turing" ? Smoothing::good_turing : Smoothing::none;
    } else if (kind == "#unk-threshold") {
      need(2);
      has_unknown = true;
      unk.rare_threshold = std::stoi(f[1]);
    } else if (kind == "#unk-tag") {
      need(2);
      unk.tags.push_back(f[1]);
    } else if (kind == "#unk") {
      need(4);
      unk.distributions[f[1]][f[2]] = std::stod(f[3]);
    } else if (kind[0] == '#') {
      throw Error("model line " + std::to_string(lineno) + ": unknown record " + kind);
    } else {
      if (f.size() != 2 && f.size() != 3)
        throw Error("model line " + std::to_string(lineno) + ": malformed");
      records.push_back({std::stod(f[0]), f[1], f.size() == 3 ? f[2] : ""});
    }
  }
  for (auto& [p, key, pattern] : records) {
    Fragment frag = pattern.empty() ? fragment_from_key(key, nts) : fragment_from_key(key, pattern);
    m.fragments.push_back({std::move(frag), p});
  }
  std::sort(m.fragments.begin(), m.fragments.end(),
            [](const auto& a, const auto& b) { return a.fragment.key < b.fragment.key; });
  rebuild_index(m);
  if (has_unknown) {
    std::sort(unk.tags.begin(), unk.tags.end());
    m.unknown = std::move(unk);
  }
  return m;
}

}  // namespace dop
