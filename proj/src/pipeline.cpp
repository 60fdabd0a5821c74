#include "dop/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "dop/oracle.hpp"

namespace dop {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ScoringError*>(&e)) return 3;
  if (dynamic_cast<const ExplosionError*>(&e) || dynamic_cast<const SamplingExhaustedError*>(&e) ||
      dynamic_cast<const OracleInfeasible*>(&e))
    return 4;
  if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const ParseError*>(&e) || dynamic_cast<const TrainingError*>(&e) ||
      dynamic_cast<const DegenerateTreeError*>(&e))
    return 2;
  return 1;
}

namespace {

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw InputError(std::string("no ") + what + " path configured");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw InputError(std::string(what) + " not found: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Writes through a temporary file so a failed run leaves no partial output.
void write_file(const std::string& path, const std::string& content) {
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    out << content;
    if (!out) throw InputError("failed writing " + path);
  }
  fs::rename(tmp, target);
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

template <typename F>
void run_parallel(std::size_t n, std::size_t workers, F&& body) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) body(i);
    });
  for (std::thread& t : pool) t.join();
}

}  // namespace

Corpus load_corpus(const std::string& path, const NormalizationConfig& config, std::ostream& log) {
  require_file(path, "treebank");
  Corpus raw = read_treebank(path);
  Corpus out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    try {
      out.push_back(normalize(raw.trees[i], config, raw.source_ids[i]), raw.source_ids[i]);
    } catch (const DegenerateTreeError& e) {
      log << "warning: " << e.what() << "; tree skipped\n";
    }
  }
  return out;
}

std::vector<Sentence> load_sentences(const std::string& path, const NormalizationConfig& config,
                                     std::ostream& log) {
  require_file(path, "sentence file");
  std::string text = read_file(path);
  auto first = text.find_first_not_of(" \t\r\n");
  std::vector<Sentence> out;
  if (first != std::string::npos && text[first] == '(') {
    Corpus c = load_corpus(path, config, log);
    for (std::size_t i = 0; i < c.size(); ++i)
      out.push_back({std::to_string(c.source_ids[i].index + 1), yield(c[i])});
    return out;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream words(line);
    Sentence s{std::to_string(lineno), {}};
    for (std::string w; words >> w;) s.words.push_back(w);
    if (s.words.empty()) {
      log << "warning: " << path << ":" << lineno << ": empty sentence skipped\n";
      continue;
    }
    out.push_back(std::move(s));
  }
  return out;
}

HeadTable head_table_for(const RunConfig& config) {
  if (config.head_table.empty()) return HeadTable::wsj();
  require_file(config.head_table, "head table");
  return HeadTable::load(config.head_table);
}

FragmentTable extract_base_table(const Corpus& corpus, const RunConfig& config, std::ostream& log) {
  FragmentTable table;
  table.corpus = CorpusStats::of(corpus);
  table.provenance.exhaustive_depth = config.exhaustive_depth;
  for (const Tree& t : corpus)
    for_each_fragment(
        t, config.exhaustive_depth, [&](Fragment&& f) { table.add(f); }, config.explosion_ceiling);

  if (!config.exhaustive_depth || config.sample_max_depth == 0 || config.sample_size == 0)
    return table;
  int max_height = 0;
  for (const Tree& t : corpus) max_height = std::max(max_height, height(t));
  std::vector<int> depths;
  for (int d = std::max(config.sample_min_depth, *config.exhaustive_depth + 1);
       d <= config.sample_max_depth; ++d) {
    if (d > max_height) {
      log << "sampling: no training tree reaches depth " << d << "; depths " << d << "-"
          << config.sample_max_depth << " skipped\n";
      break;
    }
    depths.push_back(d);
  }
  std::vector<std::vector<Fragment>> samples(depths.size());
  std::vector<SamplingStats> stats(depths.size());
  run_parallel(depths.size(), config.workers, [&](std::size_t i) {
    samples[i] = sample_fragments(corpus, depths[i], config.sample_size,
                                  mix_seed(config.seed, static_cast<std::uint64_t>(depths[i])),
                                  &stats[i]);
  });
  table.provenance.sampled = !depths.empty();
  table.provenance.seed = config.seed;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    for (const Fragment& f : samples[i]) table.add(f);
    table.provenance.sample_sizes[depths[i]] = config.sample_size;
    if (stats[i].budget_overruns)
      log << "sampling: depth " << depths[i] << ": " << stats[i].budget_overruns
          << " draws exceeded the retry budget\n";
  }
  return table;
}

ProbabilityModel build_model(const FragmentTable& base, const RunConfig& config,
                             const RestrictionConfig& restriction, const Corpus& train) {
  FragmentTable filtered = base.filter(restriction, head_table_for(config));
  ProbabilityModel m = estimate(filtered);
  if (config.smoothing == Smoothing::good_turing) m = smooth_good_turing(m, filtered);
  if (config.unknown_words) m.unknown = train_unknown(train, config.rare_threshold);
  return m;
}

std::string format_record(const ParseRecord& r) {
  char prob[40];
  std::snprintf(prob, sizeof prob, "%.12e", r.prob);
  return r.id + '\t' + (r.tree ? *r.tree : std::string("(NOPARSE)")) + '\t' + prob + '\t' +
         std::to_string(r.derivations);
}

namespace {

ParseRecord parse_record(const std::string& line, const std::string& where) {
  std::vector<std::string> f;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    f.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (f.size() != 4) throw InputError(where + ": expected 4 tab-separated fields");
  ParseRecord r;
  r.id = f[0];
  if (f[1] != "(NOPARSE)") r.tree = f[1];
  r.prob = std::stod(f[2]);
  r.derivations = std::stoul(f[3]);
  return r;
}

std::vector<ParseRecord> parse_records(const std::string& text, const std::string& source) {
  std::vector<ParseRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(parse_record(line, source + ":" + std::to_string(lineno)));
  }
  return out;
}

std::vector<std::optional<Tree>> records_to_trees(const std::vector<ParseRecord>& records) {
  std::vector<std::optional<Tree>> out;
  for (const ParseRecord& r : records) {
    if (!r.tree) {
      out.emplace_back();
      continue;
    }
    Corpus c = parse_bracketed(*r.tree, r.id);
    if (c.size() != 1) throw InputError("record " + r.id + ": expected one tree");
    out.emplace_back(c[0]);
  }
  return out;
}

}  // namespace

std::vector<ParseRecord> parse_all(const std::vector<Sentence>& sentences,
                                   const CompiledGrammar& grammar, const ProbabilityModel& model,
                                   const RunConfig& config, std::ostream& log) {
  std::vector<ParseRecord> out(sentences.size());
  std::vector<std::string> errors(sentences.size());
  ParseOptions options;
  options.k = config.k;
  options.beam = config.beam;
  run_parallel(sentences.size(), config.workers, [&](std::size_t i) {
    const Sentence& s = sentences[i];
    ParseRecord& r = out[i];
    r.id = s.id;
    if (config.max_length && s.words.size() > static_cast<std::size_t>(*config.max_length)) return;
    try {
      ParseResult p = parse_sentence(s.words, grammar, model, options);
      r.derivations = p.kbest.size();
      if (p.best_tree) {
        r.tree = p.best_text;
        r.prob = p.best_tree_prob;
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
      r = ParseRecord{s.id, std::nullopt, 0.0, 0};
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) log << "warning: sentence " << sentences[i].id << ": " << errors[i] << '\n';
  return out;
}

std::vector<std::optional<Tree>> load_test_trees(const std::string& path,
                                                 const NormalizationConfig& config,
                                                 std::ostream& log) {
  require_file(path, "test parses");
  std::string text = read_file(path);
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  auto eol = text.find('\n', first);
  std::string first_line = text.substr(first, eol == std::string::npos ? std::string::npos : eol - first);
  if (first_line.find('\t') != std::string::npos) return records_to_trees(parse_records(text, path));
  std::vector<std::optional<Tree>> out;
  for (const Tree& t : load_corpus(path, config, log)) out.emplace_back(t);
  return out;
}

std::string stats_report(const FragmentTable& table, const HeadTable& heads) {
  struct Cell {
    std::uint64_t distinct = 0, occurrences = 0;
    void add(std::uint64_t n) {
      ++distinct;
      occurrences += n;
    }
  };
  Cell all, lex, unlex;
  std::map<int, Cell> by_depth, by_words;
  std::map<std::size_t, Cell> by_nonhead;
  std::map<std::string, Cell> by_root;
  for (const auto& [key, e] : table.entries()) {
    all.add(e.count);
    (e.fragment.lexicalized() ? lex : unlex).add(e.count);
    by_depth[e.fragment.depth].add(e.count);
    by_words[e.fragment.frontier_words].add(e.count);
    by_nonhead[nonheadword_count(e.fragment.shape, heads)].add(e.count);
    by_root[e.fragment.root()].add(e.count);
  }
  std::ostringstream o;
  o << "provenance = " << table.provenance.describe() << '\n';
  o << "distinct = " << all.distinct << '\n';
  o << "occurrences = " << all.occurrences << '\n';
  o << "lexicalized_distinct = " << lex.distinct << '\n';
  o << "lexicalized_occurrences = " << lex.occurrences << '\n';
  o << "unlexicalized_distinct = " << unlex.distinct << '\n';
  o << "unlexicalized_occurrences = " << unlex.occurrences << '\n';
  auto section = [&](const char* name, const auto& m) {
    o << '\n' << '[' << name << "]\tdistinct\toccurrences\n";
    for (const auto& [k, c] : m) o << k << '\t' << c.distinct << '\t' << c.occurrences << '\n';
  };
  section("depth", by_depth);
  section("root", by_root);
  section("frontier_words", by_words);
  section("nonheadwords", by_nonhead);
  return o.str();
}

RestrictionConfig sweep_restriction(const RestrictionConfig& base, const std::string& dimension,
                                    const std::string& value) {
  RestrictionConfig r = base;
  Bound b = parse_bound(value);
  if (dimension == "depth") {
    r.max_depth = b;
  } else if (dimension == "words") {
    r.max_frontier_words = b;
  } else if (dimension == "unlexdepth") {
    // Row ">= v" deletes unlexicalized fragments of depth v and more.
    if (b && *b < 1) throw ConfigError("unlexdepth values start at 1");
    r.max_unlexicalized_depth = b ? Bound(*b - 1) : Bound();
  } else if (dimension == "nonheadwords") {
    r.max_nonheadwords = b;
  } else {
    throw ConfigError("unknown sweep dimension '" + dimension + "'");
  }
  r.validate();
  return r;
}

std::string sweep_row_label(const std::string& dimension, const std::string& value) {
  Bound b = parse_bound(value);
  if (!b) return "unrestricted";
  const std::string v = std::to_string(*b);
  if (dimension == "unlexdepth") return ">=" + v;
  if ((dimension == "depth" && *b == 1) || (dimension == "nonheadwords" && *b == 0)) return v;
  return "<=" + v;
}

std::string sweep_header(const std::string& dimension) {
  if (dimension == "depth") return "depth of subtrees";
  if (dimension == "words") return "# words in subtrees";
  if (dimension == "unlexdepth") return "depth of deleted unlexicalized subtrees";
  return "# nonheadwords in subtrees";
}

namespace {

std::vector<std::string> default_sweep_values(const std::string& dimension) {
  if (dimension == "depth") return {"1", "2", "3", "4", "5", "6", "8", "10", "12", "14"};
  if (dimension == "words")
    return {"1", "2", "3", "4", "6", "8", "10", "11", "12", "13", "14", "16", "inf"};
  if (dimension == "unlexdepth") return {"1", "2", "3", "4", "5", "6", "7", "8", "10", "12"};
  return {"0", "1", "2", "3", "4", "5", "6", "7", "8", "inf"};
}

void emit(const RunConfig& config, std::ostream& out, const std::string& text) {
  out << text;
  if (!config.report.empty()) write_file(config.report, text);
}

}  // namespace

void cmd_train(const RunConfig& config, std::ostream& out, std::ostream& log) {
  require_file(config.train, "training treebank");
  Corpus corpus = load_corpus(config.train, config.normalization, log);
  if (corpus.empty()) throw InputError("training treebank " + config.train + " has no usable trees");
  FragmentTable base = extract_base_table(corpus, config, log);
  ProbabilityModel model = build_model(base, config, config.restriction, corpus);

  std::ostringstream table_text, model_text;
  base.write(table_text);
  model.write(model_text);
  write_file(config.fragments, table_text.str());
  write_file(config.model, model_text.str());

  out << "trees = " << corpus.size() << '\n';
  out << "restriction = " << config.restriction.describe() << '\n';
  out << "model_fragments = " << model.fragments.size() << '\n';
  if (!model.smoothing_fallback.empty()) {
    out << "smoothing_fallback =";
    for (const std::string& r : model.smoothing_fallback) out << ' ' << r;
    out << '\n';
  }
  out << stats_report(base, head_table_for(config));
}

void cmd_parse(const RunConfig& config, std::ostream& out, std::ostream& log) {
  require_file(config.model, "model file");
  std::vector<Sentence> sentences = load_sentences(config.test, config.normalization, log);
  std::ifstream in(config.model);
  ProbabilityModel model = ProbabilityModel::read(in);
  CompiledGrammar grammar = compile(model);

  auto t0 = std::chrono::steady_clock::now();
  std::vector<ParseRecord> records = parse_all(sentences, grammar, model, config, log);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::string text;
  std::size_t noparse = 0;
  for (const ParseRecord& r : records) {
    text += format_record(r) + '\n';
    noparse += !r.tree;
  }
  write_file(config.output, text);
  out << "sentences = " << records.size() << '\n';
  out << "noparse = " << noparse << '\n';
  log << "parsed " << records.size() << " sentences in " << fixed2(secs) << " s ("
      << fixed2(secs > 0 ? static_cast<double>(records.size()) / secs : 0.0) << " sentences/s)\n";
}

EvalReport cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& log) {
  Corpus gold = load_corpus(config.test, config.normalization, log);
  std::vector<std::optional<Tree>> test = load_test_trees(config.output, config.normalization, log);
  if (gold.size() != test.size())
    throw ScoringError("gold " + config.test + " has " + std::to_string(gold.size()) +
                       " sentences but " + config.output + " has " + std::to_string(test.size()));
  EvalReport report = score(gold.trees, test, config.eval);
  std::ostringstream text;
  report.write(text);
  emit(config, out, text.str());
  return report;
}

void cmd_stats(const RunConfig& config, std::ostream& out, std::ostream& log) {
  (void)log;
  require_file(config.fragments, "fragment table");
  std::ifstream in(config.fragments);
  FragmentTable table = FragmentTable::read(in);
  HeadTable heads = head_table_for(config);
  emit(config, out, stats_report(table.filter(config.restriction, heads), heads));
}

void cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& log) {
  require_file(config.fragments, "fragment table");
  const std::string& eval_path = config.sweep_set == "dev" ? config.dev : config.test;
  std::ifstream in(config.fragments);
  const FragmentTable base = FragmentTable::read(in);
  const HeadTable heads = head_table_for(config);
  Corpus train;
  if (config.unknown_words) {
    require_file(config.train, "training treebank");
    train = load_corpus(config.train, config.normalization, log);
  }
  Corpus gold = load_corpus(eval_path, config.normalization, log);
  std::vector<Sentence> sentences;
  for (std::size_t i = 0; i < gold.size(); ++i)
    sentences.push_back({std::to_string(gold.source_ids[i].index + 1), yield(gold[i])});

  std::vector<std::string> values =
      config.sweep_values.empty() ? default_sweep_values(config.sweep_dimension) : config.sweep_values;
  EvalConfig ec = config.eval;
  ec.cutoffs = {config.sweep_cutoff};

  std::map<std::uint64_t, std::vector<ParseRecord>> memo;
  std::ostringstream table;
  table << sweep_header(config.sweep_dimension) << "\tLP\tLR\n";
  for (const std::string& value : values) {
    std::string label;
    try {
      label = sweep_row_label(config.sweep_dimension, value);
      RestrictionConfig r = sweep_restriction(config.restriction, config.sweep_dimension, value);
      FragmentTable filtered = base.filter(r, heads);
      const std::uint64_t hash = filtered.content_hash();
      char hex[20];
      std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
      const fs::path cache_file =
          config.sweep_cache.empty() ? fs::path() : fs::path(config.sweep_cache) / (std::string(hex) + ".parses");

      std::vector<ParseRecord> records;
      if (auto it = memo.find(hash); it != memo.end()) {
        records = it->second;
        log << "sweep " << label << ": reusing parses of an identical table\n";
      } else if (!cache_file.empty() && fs::is_regular_file(cache_file)) {
        records = parse_records(read_file(cache_file.string()), cache_file.string());
        log << "sweep " << label << ": parses read from " << cache_file.string() << '\n';
      } else {
        ProbabilityModel m = build_model(base, config, r, train);
        CompiledGrammar g = compile(m);
        auto t0 = std::chrono::steady_clock::now();
        records = parse_all(sentences, g, m, config, log);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log << "sweep " << label << ": " << m.fragments.size() << " fragments, parsed in "
            << fixed2(secs) << " s\n";
        if (!cache_file.empty()) {
          std::string text;
          for (const ParseRecord& rec : records) text += format_record(rec) + '\n';
          write_file(cache_file.string(), text);
        }
      }
      memo.emplace(hash, records);
      EvalReport rep = score(gold.trees, records_to_trees(records), ec);
      const CutoffReport& b = rep.block(config.sweep_cutoff);
      table << label << '\t' << fixed2(b.precision()) << '\t' << fixed2(b.recall()) << '\n';
    } catch (const std::exception& e) {
      if (label.empty()) label = value;
      table << label << "\terror\terror\n";
      log << "sweep " << label << ": " << e.what() << '\n';
    }
  }
  emit(config, out, table.str());
}

}  // namespace dop
