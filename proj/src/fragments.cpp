#include "dop/fragments.hpp"

#include <algorithm>
#include <climits>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace dop {

std::string bound_text(Bound b) { return b ? std::to_string(*b) : std::string("inf"); }

Bound parse_bound(const std::string& text) {
  if (text == "inf" || text == "unlimited" || text == "none" || text == "unrestricted" ||
      text.empty())
    return std::nullopt;
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(text, &used);
  } catch (const std::exception&) {
    throw Error("bad bound '" + text + "'");
  }
  if (used != text.size()) throw Error("bad bound '" + text + "'");
  return v;
}

Fragment Fragment::from_shape(Tree shape) {
  Fragment f;
  f.key = write_bracketed(shape);
  f.depth = height(shape);
  f.frontier_words = static_cast<int>(yield(shape).size());
  f.shape = std::move(shape);
  return f;
}

void RestrictionConfig::validate() const {
  auto check = [](Bound b, int min, const char* name) {
    if (b && *b < min)
      throw Error(std::string(name) + " must be >= " + std::to_string(min) + " (got " +
                  std::to_string(*b) + ")");
  };
  check(max_depth, 1, "max_depth");
  check(max_frontier_words, 1, "max_frontier_words");
  check(max_unlexicalized_depth, 0, "max_unlexicalized_depth");
  check(max_nonheadwords, 0, "max_nonheadwords");
}

std::string RestrictionConfig::describe() const {
  return "depth<=" + bound_text(max_depth) + ",words<=" + bound_text(max_frontier_words) +
         ",unlex<=" + bound_text(max_unlexicalized_depth) +
         ",nonhead<=" + bound_text(max_nonheadwords);
}

ExplosionError::ExplosionError(std::uint64_t occurrences, std::uint64_t ceiling)
    : Error("tree has " +
            (occurrences == std::numeric_limits<std::uint64_t>::max()
                 ? std::string("more than 2^64")
                 : std::to_string(occurrences)) +
            " fragment occurrences, above the ceiling of " + std::to_string(ceiling) +
            "; use sampled extraction instead") {}

namespace {

constexpr std::uint64_t kSat = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) { return a > kSat - b ? kSat : a + b; }
std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  return a > kSat / b ? kSat : a * b;
}

int budget_of(Bound b) { return b ? *b : INT_MAX; }

// Fragments rooted at `node` with depth <= budget (budget >= 1).
std::uint64_t occurrences_at(const Tree& node, int budget) {
  std::uint64_t n = 1;
  for (const Tree& c : node.children) {
    if (c.terminal) continue;
    std::uint64_t below = budget >= 2 && !c.is_leaf() ? occurrences_at(c, budget - 1) : 0;
    n = sat_mul(n, sat_add(1, below));
  }
  return n;
}

std::uint64_t total_occurrences(const Tree& node, int budget) {
  if (node.is_leaf()) return 0;
  std::uint64_t n = budget >= 1 ? occurrences_at(node, budget) : 0;
  for (const Tree& c : node.children) n = sat_add(n, total_occurrences(c, budget));
  return n;
}

std::vector<Tree> shapes_at(const Tree& node, int budget) {
  std::vector<std::vector<Tree>> options;
  options.reserve(node.children.size());
  for (const Tree& c : node.children) {
    std::vector<Tree> opts;
    if (c.terminal || c.is_leaf()) {
      opts.push_back(c);
    } else {
      opts.push_back(Tree::site(c.label));
      if (budget >= 2) {
        auto deeper = shapes_at(c, budget - 1);
        opts.insert(opts.end(), std::make_move_iterator(deeper.begin()),
                    std::make_move_iterator(deeper.end()));
      }
    }
    options.push_back(std::move(opts));
  }
  std::vector<Tree> out;
  std::vector<std::size_t> pick(options.size(), 0);
  while (true) {
    Tree t;
    t.label = node.label;
    t.children.reserve(options.size());
    for (std::size_t i = 0; i < options.size(); ++i) t.children.push_back(options[i][pick[i]]);
    out.push_back(std::move(t));
    // odometer, rightmost child varies fastest
    std::size_t i = options.size();
    while (i > 0) {
      --i;
      if (++pick[i] < options[i].size()) break;
      pick[i] = 0;
      if (i == 0) return out;
    }
    if (options.empty()) return out;
  }
}

void visit_nodes(const Tree& node, int budget, const std::function<void(Fragment&&)>& visit) {
  if (node.is_leaf()) return;
  if (budget >= 1)
    for (Tree& shape : shapes_at(node, budget)) visit(Fragment::from_shape(std::move(shape)));
  for (const Tree& c : node.children) visit_nodes(c, budget, visit);
}

}  // namespace

std::uint64_t count_fragment_occurrences(const Tree& tree, Bound max_depth) {
  return total_occurrences(tree, budget_of(max_depth));
}

void for_each_fragment(const Tree& tree, Bound max_depth,
                       const std::function<void(Fragment&&)>& visit, std::uint64_t ceiling) {
  std::uint64_t n = count_fragment_occurrences(tree, max_depth);
  if (n > ceiling) throw ExplosionError(n, ceiling);
  visit_nodes(tree, budget_of(max_depth), visit);
}

std::vector<Fragment> enumerate_fragments(const Tree& tree, Bound max_depth,
                                          std::uint64_t ceiling) {
  std::vector<Fragment> out;
  for_each_fragment(tree, max_depth, [&](Fragment&& f) { out.push_back(std::move(f)); }, ceiling);
  return out;
}

namespace {

// Unbiased draw from [0, n); kept independent of the standard distributions so
// samples are identical across standard libraries.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = kSat - kSat % n;
  while (true) {
    std::uint64_t x = rng();
    if (x < limit) return x % n;
  }
}

bool coin(std::mt19937_64& rng) { return (rng() >> 63) != 0; }

// Grows a fragment below `src`; returns false as soon as depth exceeds target.
bool grow(const Tree& src, int level, int target, std::mt19937_64& rng, Tree& out, int& depth) {
  out.label = src.label;
  out.children.clear();
  out.children.reserve(src.children.size());
  for (const Tree& c : src.children) {
    if (c.terminal || c.is_leaf() || !coin(rng)) {
      out.children.push_back(c.terminal ? c : Tree::site(c.label));
      depth = std::max(depth, level + 1);
      if (depth > target) return false;
    } else {
      Tree sub;
      if (!grow(c, level + 1, target, rng, sub, depth)) return false;
      out.children.push_back(std::move(sub));
    }
  }
  return true;
}

void collect_nodes(const Tree& t, std::vector<const Tree*>& out) {
  if (t.is_leaf()) return;
  out.push_back(&t);
  for (const Tree& c : t.children) collect_nodes(c, out);
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Draws from the growth process conditioned on the resulting depth, which is
// what unbounded rejection converges to. F(v, d) is the probability that the
// fragment grown at v has depth <= d.
class ConditionalSampler {
 public:
  ConditionalSampler(int target) : target_(target) {}

  double at_most(const Tree* v, int d) {
    if (d < 1) return 0.0;
    auto& memo = memo_[v];
    if (memo.empty()) memo.assign(target_ + 1, -1.0);
    if (memo[d] >= 0.0) return memo[d];
    double p = 1.0;
    for (const Tree& c : v->children) p *= child_at_most(c, d - 1);
    return memo[d] = p;
  }

  double exactly(const Tree* v, int d) { return at_most(v, d) - at_most(v, d - 1); }

  Tree exact(const Tree& v, int d, std::mt19937_64& rng) {
    const int e = d - 1;
    const std::size_t m = v.children.size();
    std::vector<double> le(m + 1, 1.0), lt(m + 1, 1.0);
    for (std::size_t i = m; i-- > 0;) {
      le[i] = le[i + 1] * child_at_most(v.children[i], e);
      lt[i] = lt[i + 1] * child_at_most(v.children[i], e - 1);
    }
    Tree out;
    out.label = v.label;
    bool reached = false;
    for (std::size_t i = 0; i < m; ++i) {
      const Tree& c = v.children[i];
      if (reached) {
        out.children.push_back(bounded(c, e, rng));
        continue;
      }
      const double hit = (child_at_most(c, e) - child_at_most(c, e - 1)) * le[i + 1];
      const double miss = child_at_most(c, e - 1) * (le[i + 1] - lt[i + 1]);
      if (unit(rng) * (hit + miss) < hit) {
        out.children.push_back(child_exact(c, e, rng));
        reached = true;
      } else {
        out.children.push_back(bounded(c, e - 1, rng));
      }
    }
    return out;
  }

 private:
  // Probability that child c adds at most e levels below its parent's edge.
  double child_at_most(const Tree& c, int e) {
    if (e < 0) return 0.0;
    if (c.terminal || c.is_leaf()) return 1.0;
    return 0.5 + 0.5 * at_most(&c, e);
  }

  Tree child_exact(const Tree& c, int e, std::mt19937_64& rng) {
    if (c.terminal) return c;
    if (e == 0 || c.is_leaf()) return Tree::site(c.label);
    return exact(c, e, rng);
  }

  Tree bounded(const Tree& c, int e, std::mt19937_64& rng) {
    if (c.terminal) return c;
    if (c.is_leaf()) return Tree::site(c.label);
    const double expand = 0.5 * at_most(&c, e);
    if (unit(rng) * (0.5 + expand) < 0.5) return Tree::site(c.label);
    Tree out;
    out.label = c.label;
    for (const Tree& g : c.children) out.children.push_back(bounded(g, e - 1, rng));
    return out;
  }

  int target_;
  std::map<const Tree*, std::vector<double>> memo_;
};

}  // namespace

std::vector<Fragment> sample_fragments(const Corpus& corpus, int target_depth, std::size_t n,
                                       std::uint64_t seed, SamplingStats* stats) {
  if (target_depth < 2) throw Error("sampled fragments need target depth >= 2");
  if (n < 1) throw Error("sample size must be >= 1");
  if (corpus.empty()) throw SamplingExhaustedError("cannot sample from an empty corpus");

  std::vector<std::vector<const Tree*>> nodes(corpus.size());
  int max_height = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    collect_nodes(corpus[i], nodes[i]);
    max_height = std::max(max_height, height(corpus[i]));
  }

  // Fallback after the retry budget: (tree, node) drawn with the probability
  // that rejection would have accepted there, then a conditioned growth.
  ConditionalSampler conditional(target_depth);
  std::vector<const Tree*> flat;
  std::vector<double> cumulative;

  std::mt19937_64 rng(seed);
  SamplingStats local;
  std::vector<Fragment> out;
  out.reserve(n);
  while (out.size() < n) {
    int tries = 0;
    while (true) {
      ++local.attempts;
      ++tries;
      const auto& tree_nodes = nodes[draw_below(rng, corpus.size())];
      if (!tree_nodes.empty()) {
        const Tree* v = tree_nodes[draw_below(rng, tree_nodes.size())];
        Tree shape;
        int depth = 0;
        if (grow(*v, 0, target_depth, rng, shape, depth) && depth == target_depth) {
          out.push_back(Fragment::from_shape(std::move(shape)));
          break;
        }
      }
      if (tries == kSampleRetryBudget) {
        if (max_height < target_depth)
          throw SamplingExhaustedError("no node in the corpus supports a fragment of depth " +
                                       std::to_string(target_depth) + " (deepest tree has depth " +
                                       std::to_string(max_height) + ")");
        ++local.budget_overruns;
        if (flat.empty()) {
          double total = 0.0;
          for (const auto& tn : nodes)
            for (const Tree* v : tn) {
              double w = conditional.exactly(v, target_depth) / static_cast<double>(tn.size());
              if (w <= 0.0) continue;
              total += w;
              flat.push_back(v);
              cumulative.push_back(total);
            }
        }
        const double u = unit(rng) * cumulative.back();
        std::size_t pick = static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        pick = std::min(pick, flat.size() - 1);
        out.push_back(Fragment::from_shape(conditional.exact(*flat[pick], target_depth, rng)));
        break;
      }
    }
  }
  if (stats) {
    stats->attempts += local.attempts;
    stats->budget_overruns += local.budget_overruns;
  }
  return out;
}

bool passes(const Fragment& f, const RestrictionConfig& c, const HeadTable& table) {
  if (c.max_depth && f.depth > *c.max_depth) return false;
  if (c.max_frontier_words && f.frontier_words > *c.max_frontier_words) return false;
  if (c.max_unlexicalized_depth && f.frontier_words == 0 && f.depth > *c.max_unlexicalized_depth)
    return false;
  if (c.max_nonheadwords &&
      nonheadword_count(f.shape, table) > static_cast<std::size_t>(*c.max_nonheadwords))
    return false;
  return true;
}

std::string Provenance::describe() const {
  std::string out = "exhaustive_depth=" + bound_text(exhaustive_depth);
  if (sampled) {
    out += " seed=" + std::to_string(seed) + " samples=";
    bool first = true;
    for (const auto& [d, size] : sample_sizes) {
      if (!first) out += ',';
      first = false;
      out += std::to_string(d) + ':' + std::to_string(size);
    }
  }
  if (!restriction.empty()) out += " restriction=" + restriction;
  return out;
}

Provenance Provenance::parse(const std::string& text) {
  Provenance p;
  std::istringstream in(text);
  for (std::string field; in >> field;) {
    auto eq = field.find('=');
    if (eq == std::string::npos) throw Error("bad provenance field '" + field + "'");
    std::string k = field.substr(0, eq), v = field.substr(eq + 1);
    if (k == "exhaustive_depth") {
      p.exhaustive_depth = parse_bound(v);
    } else if (k == "seed") {
      p.seed = std::stoull(v);
    } else if (k == "samples") {
      p.sampled = true;
      std::istringstream items(v);
      for (std::string item; std::getline(items, item, ',');) {
        auto colon = item.find(':');
        if (colon == std::string::npos) throw Error("bad sample size '" + item + "'");
        p.sample_sizes[std::stoi(item.substr(0, colon))] = std::stoull(item.substr(colon + 1));
      }
    } else if (k == "restriction") {
      p.restriction = v;
    } else {
      throw Error("unknown provenance field '" + k + "'");
    }
  }
  return p;
}

namespace {

void count_nodes(const Tree& t, std::map<std::string, std::uint64_t>& counts) {
  if (t.terminal) return;
  ++counts[t.label];
  for (const Tree& c : t.children) count_nodes(c, counts);
}

}  // namespace

CorpusStats CorpusStats::of(const Corpus& corpus) {
  CorpusStats s;
  for (const Tree& t : corpus) {
    count_nodes(t, s.node_counts);
    s.start_labels.insert(t.label);
  }
  return s;
}

void CorpusStats::merge(const CorpusStats& other) {
  for (const auto& [label, n] : other.node_counts) node_counts[label] += n;
  start_labels.insert(other.start_labels.begin(), other.start_labels.end());
}

void FragmentTable::add(const Fragment& fragment, std::uint64_t count) {
  if (count == 0) return;
  auto [it, inserted] = entries_.try_emplace(fragment.key, FragmentEntry{fragment, 0});
  if (!inserted && !(it->second.fragment.shape == fragment.shape))
    throw Error("two fragment shapes share the key " + fragment.key +
                " (a word is spelled like a nonterminal label)");
  it->second.count += count;
  root_totals_[fragment.root()] += count;
}

void FragmentTable::merge(const FragmentTable& other) {
  for (const auto& [key, e] : other.entries_) add(e.fragment, e.count);
  corpus.merge(other.corpus);
}

std::uint64_t FragmentTable::count(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.count;
}

std::uint64_t FragmentTable::total_occurrences() const {
  std::uint64_t n = 0;
  for (const auto& [root, total] : root_totals_) n += total;
  return n;
}

FragmentTable FragmentTable::filter(const RestrictionConfig& config,
                                    const HeadTable& table) const {
  config.validate();
  FragmentTable out;
  out.provenance = provenance;
  out.provenance.restriction = config.describe();
  out.corpus = corpus;
  for (const auto& [key, e] : entries_)
    if (passes(e.fragment, config, table)) out.add(e.fragment, e.count);
  return out;
}

namespace {

void collect_labels(const Tree& t, std::set<std::string>& out) {
  if (t.terminal) return;
  out.insert(t.label);
  for (const Tree& c : t.children) collect_labels(c, out);
}

// Labels that open a bracket in `key`.
void scan_internal_labels(const std::string& key, std::set<std::string>& out) {
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (key[i] != '(') continue;
    std::size_t j = i + 1;
    while (j < key.size() && key[j] != ' ' && key[j] != '(' && key[j] != ')') ++j;
    if (j > i + 1) out.insert(key.substr(i + 1, j - i - 1));
  }
}

}  // namespace

std::set<std::string> FragmentTable::nonterminals() const {
  std::set<std::string> out;
  for (const auto& [key, e] : entries_) collect_labels(e.fragment.shape, out);
  for (const auto& [label, n] : corpus.node_counts) out.insert(label);
  return out;
}

void FragmentTable::write(std::ostream& out) const {
  out << "#provenance " << provenance.describe() << '\n';
  out << "#nonterminals";
  for (const std::string& l : nonterminals()) out << ' ' << l;
  out << '\n';
  for (const auto& [label, n] : corpus.node_counts) out << "#nodes\t" << label << '\t' << n << '\n';
  for (const std::string& s : corpus.start_labels) out << "#start\t" << s << '\n';
  const std::set<std::string> labels = nonterminals();
  for (const auto& [key, e] : entries_) {
    out << e.count << '\t' << key;
    std::string pattern = key_pattern(e.fragment, labels);
    if (!pattern.empty()) out << '\t' << pattern;
    out << '\n';
  }
}

FragmentTable FragmentTable::read(std::istream& in) {
  FragmentTable table;
  struct Record {
    std::uint64_t count;
    std::string key, pattern;
  };
  std::vector<Record> records;
  std::optional<std::set<std::string>> nonterminals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto bad = [&] { return Error("fragment table line " + std::to_string(lineno) + ": malformed"); };
    if (line[0] == '#') {
      if (line.rfind("#provenance", 0) == 0) {
        table.provenance = Provenance::parse(line.size() > 12 ? line.substr(12) : "");
      } else if (line.rfind("#nonterminals", 0) == 0) {
        std::istringstream fields(line.substr(13));
        nonterminals.emplace();
        for (std::string l; fields >> l;) nonterminals->insert(l);
      } else if (line.rfind("#nodes\t", 0) == 0) {
        auto tab = line.find('\t', 7);
        if (tab == std::string::npos) throw bad();
        table.corpus.node_counts[line.substr(7, tab - 7)] = std::stoull(line.substr(tab + 1));
      } else if (line.rfind("#start\t", 0) == 0) {
        table.corpus.start_labels.insert(line.substr(7));
      }
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw bad();
    auto tab2 = line.find('\t', tab + 1);
    std::string key = line.substr(tab + 1, tab2 == std::string::npos ? tab2 : tab2 - tab - 1);
    std::string pattern = tab2 == std::string::npos ? "" : line.substr(tab2 + 1);
    records.push_back({std::stoull(line.substr(0, tab)), std::move(key), std::move(pattern)});
  }
  if (!nonterminals) {
    nonterminals.emplace();
    for (const auto& [n, key, pattern] : records) scan_internal_labels(key, *nonterminals);
  }
  for (const auto& [n, key, pattern] : records) {
    Fragment f = pattern.empty() ? fragment_from_key(key, *nonterminals)
                                 : fragment_from_key(key, pattern);
    if (f.key != key) throw Error("fragment key is not canonical: " + key);
    table.add(f, n);
  }
  return table;
}

std::uint64_t FragmentTable::content_hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
  };
  for (const auto& [key, e] : entries_) {
    feed(std::to_string(e.count));
    feed("\t");
    feed(key);
    feed("\n");
  }
  return h;
}

FragmentTable collect(std::span<const Fragment> fragments, const RestrictionConfig& config,
                      const HeadTable& table) {
  config.validate();
  FragmentTable out;
  for (const Fragment& f : fragments)
    if (passes(f, config, table)) out.add(f);
  out.provenance.restriction = config.describe();
  return out;
}

Fragment fragment_from_key(const std::string& key, const std::set<std::string>& nonterminals) {
  Tree shape = parse_tree_with_sites(
      key, [&](std::string_view s) { return nonterminals.count(std::string(s)) > 0; });
  return Fragment::from_shape(std::move(shape));
}

Fragment fragment_from_key(const std::string& key, std::string_view pattern) {
  std::size_t next = 0;
  Tree shape = parse_tree_with_sites(key, [&](std::string_view) {
    if (next >= pattern.size()) throw Error("leaf pattern too short for " + key);
    char c = pattern[next++];
    if (c != 's' && c != 'w') throw Error("bad leaf pattern '" + std::string(pattern) + "'");
    return c == 's';
  });
  if (next != pattern.size()) throw Error("leaf pattern too long for " + key);
  return Fragment::from_shape(std::move(shape));
}

namespace {

void push_pattern(const Tree& t, std::string& out) {
  if (t.is_leaf()) {
    out += t.terminal ? 'w' : 's';
    return;
  }
  for (const Tree& c : t.children) push_pattern(c, out);
}

bool word_looks_like_label(const Tree& t, const std::set<std::string>& nonterminals) {
  if (t.is_leaf()) return t.terminal && nonterminals.count(t.label) > 0;
  for (const Tree& c : t.children)
    if (word_looks_like_label(c, nonterminals)) return true;
  return false;
}

}  // namespace

std::string frontier_pattern(const Tree& shape) {
  std::string out;
  for (const Tree& c : shape.children) push_pattern(c, out);
  return out;
}

std::string key_pattern(const Fragment& f, const std::set<std::string>& nonterminals) {
  if (!word_looks_like_label(f.shape, nonterminals)) return "";
  return frontier_pattern(f.shape);
}

}  // namespace dop
