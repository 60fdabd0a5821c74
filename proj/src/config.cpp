#include "dop/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dop {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, bool commas = true) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if ((commas && c == ',') || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string join(const std::vector<std::string>& items, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  double d = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec == std::errc() && p == v.data() + v.size()) return out;
  // Accept 1e8-style literals for ceilings.
  auto [q, ec2] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec2 == std::errc() && q == v.data() + v.size() && d >= 0 && d == static_cast<double>(
                                                                           static_cast<std::uint64_t>(d)))
    return static_cast<std::uint64_t>(d);
  throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
}

double to_double(const std::string& key, const std::string& v) {
  double d = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

Bound to_bound(const std::string& key, const std::string& v) {
  try {
    return parse_bound(v);
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

const char* text(bool b) { return b ? "true" : "false"; }

std::string number(double d) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string& v = value;
  if (key == "train") train = v;
  else if (key == "dev") dev = v;
  else if (key == "test") test = v;
  else if (key == "model") model = v;
  else if (key == "fragments") fragments = v;
  else if (key == "output") output = v;
  else if (key == "report") report = v;
  else if (key == "head_table") head_table = v;
  else if (key == "max_depth") restriction.max_depth = to_bound(key, v);
  else if (key == "max_words") restriction.max_frontier_words = to_bound(key, v);
  else if (key == "max_unlex") restriction.max_unlexicalized_depth = to_bound(key, v);
  else if (key == "max_nonheadwords") restriction.max_nonheadwords = to_bound(key, v);
  else if (key == "exhaustive_depth") exhaustive_depth = to_bound(key, v);
  else if (key == "sample_depths") {
    auto dash = v.find('-');
    if (v == "none" || v.empty()) {
      sample_min_depth = 2;
      sample_max_depth = 0;
    } else if (dash == std::string::npos) {
      sample_min_depth = sample_max_depth = static_cast<int>(to_uint(key, v));
    } else {
      sample_min_depth = static_cast<int>(to_uint(key, trim(v.substr(0, dash))));
      sample_max_depth = static_cast<int>(to_uint(key, trim(v.substr(dash + 1))));
    }
    if (sample_max_depth != 0 && (sample_min_depth < 2 || sample_max_depth < sample_min_depth))
      throw ConfigError(key + ": expected a range like 2-14 with a lower end of at least 2");
  }
  else if (key == "sample_size") sample_size = to_uint(key, v);
  else if (key == "seed") seed = to_uint(key, v);
  else if (key == "explosion_ceiling") explosion_ceiling = to_uint(key, v);
  else if (key == "k") {
    k = to_uint(key, v);
    if (k == 0) throw ConfigError("k must be at least 1");
  }
  else if (key == "beam") {
    beam = to_double(key, v);
    if (beam < 0.0 || beam > 1.0) throw ConfigError("beam must lie in [0, 1]");
  }
  else if (key == "max_length") max_length = to_bound(key, v);
  else if (key == "smoothing") {
    if (v == "none") smoothing = Smoothing::none;
    else if (v == "good_turing") smoothing = Smoothing::good_turing;
    else throw ConfigError("smoothing: expected none or good_turing, got '" + v + "'");
  }
  else if (key == "unknown_words") unknown_words = to_bool(key, v);
  else if (key == "rare_threshold") rare_threshold = static_cast<int>(to_uint(key, v));
  else if (key == "strip_function_tags") normalization.strip_function_tags = to_bool(key, v);
  else if (key == "strip_coindexing") normalization.strip_coindexing = to_bool(key, v);
  else if (key == "remove_quote_tokens") normalization.remove_quote_tokens = to_bool(key, v);
  else if (key == "remove_empty_elements") normalization.remove_empty_elements = to_bool(key, v);
  else if (key == "punctuation_tags") {
    // Whitespace separated: "," is itself a tag.
    auto tags = split_list(v, false);
    normalization.punctuation_tags = {tags.begin(), tags.end()};
    eval.punctuation_tags = normalization.punctuation_tags;
  }
  else if (key == "cutoffs") {
    eval.cutoffs.clear();
    for (const std::string& c : split_list(v)) eval.cutoffs.push_back(to_uint(key, c));
  }
  else if (key == "workers") {
    workers = to_uint(key, v);
    if (workers == 0) throw ConfigError("workers must be at least 1");
  }
  else if (key == "sweep_dimension") {
    if (v != "depth" && v != "words" && v != "unlexdepth" && v != "nonheadwords")
      throw ConfigError("sweep_dimension: expected depth, words, unlexdepth or nonheadwords");
    sweep_dimension = v;
  }
  else if (key == "sweep_values") sweep_values = split_list(v);
  else if (key == "sweep_set") {
    if (v != "test" && v != "dev") throw ConfigError("sweep_set: expected test or dev");
    sweep_set = v;
  }
  else if (key == "sweep_cutoff") sweep_cutoff = to_uint(key, v);
  else if (key == "sweep_cache") sweep_cache = v;
  else throw ConfigError("unknown configuration key '" + key + "'");

  if (key.rfind("max_", 0) == 0 && key != "max_length") {
    try {
      restriction.validate();
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
}

void RunConfig::apply_override(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

RunConfig RunConfig::parse(std::istream& in, const std::string& source) {
  RunConfig c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse(in, path);
}

std::string RunConfig::serialize() const {
  std::ostringstream o;
  o << "train = " << train << '\n';
  o << "dev = " << dev << '\n';
  o << "test = " << test << '\n';
  o << "model = " << model << '\n';
  o << "fragments = " << fragments << '\n';
  o << "output = " << output << '\n';
  o << "report = " << report << '\n';
  o << "head_table = " << head_table << '\n';
  o << "max_depth = " << bound_text(restriction.max_depth) << '\n';
  o << "max_words = " << bound_text(restriction.max_frontier_words) << '\n';
  o << "max_unlex = " << bound_text(restriction.max_unlexicalized_depth) << '\n';
  o << "max_nonheadwords = " << bound_text(restriction.max_nonheadwords) << '\n';
  o << "exhaustive_depth = " << bound_text(exhaustive_depth) << '\n';
  if (sample_max_depth == 0)
    o << "sample_depths = none\n";
  else
    o << "sample_depths = " << sample_min_depth << '-' << sample_max_depth << '\n';
  o << "sample_size = " << sample_size << '\n';
  o << "seed = " << seed << '\n';
  o << "explosion_ceiling = " << explosion_ceiling << '\n';
  o << "k = " << k << '\n';
  o << "beam = " << number(beam) << '\n';
  o << "max_length = " << bound_text(max_length) << '\n';
  o << "smoothing = " << (smoothing == Smoothing::none ? "none" : "good_turing") << '\n';
  o << "unknown_words = " << text(unknown_words) << '\n';
  o << "rare_threshold = " << rare_threshold << '\n';
  o << "strip_function_tags = " << text(normalization.strip_function_tags) << '\n';
  o << "strip_coindexing = " << text(normalization.strip_coindexing) << '\n';
  o << "remove_quote_tokens = " << text(normalization.remove_quote_tokens) << '\n';
  o << "remove_empty_elements = " << text(normalization.remove_empty_elements) << '\n';
  o << "punctuation_tags = "
    << join({normalization.punctuation_tags.begin(), normalization.punctuation_tags.end()}, " ")
    << '\n';
  std::vector<std::string> cuts;
  for (std::size_t c : eval.cutoffs) cuts.push_back(std::to_string(c));
  o << "cutoffs = " << join(cuts) << '\n';
  o << "workers = " << workers << '\n';
  o << "sweep_dimension = " << sweep_dimension << '\n';
  o << "sweep_values = " << join(sweep_values) << '\n';
  o << "sweep_set = " << sweep_set << '\n';
  o << "sweep_cutoff = " << sweep_cutoff << '\n';
  o << "sweep_cache = " << sweep_cache << '\n';
  return o.str();
}

}  // namespace dop
