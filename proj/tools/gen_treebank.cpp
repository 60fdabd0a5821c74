// Writes a synthetic English-like treebank in Penn bracketed format.
//
// The trees carry the usual WSJ decorations (function tags, co-indexed
// traces, quotation marks, punctuation), and prepositional attachment depends
// on the verb and the prepositional object: instruments attach to perception
// and action verbs, attributes to the object noun phrase. A treebank PCFG
// cannot see that dependency, larger lexicalized fragments can.
#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

namespace {

using Words = std::vector<std::string>;

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  // Returns a bracketed tree whose yield has at most max_words tokens.
  std::string sentence(std::size_t max_words) {
    while (true) {
      words_ = 0;
      trace_ = 0;
      std::string s = top();
      if (words_ <= max_words && words_ >= 3) return "( " + s + " )";
    }
  }

 private:
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool chance(double p) { return static_cast<double>(rng_() >> 11) * 0x1.0p-53 < p; }
  const std::string& pick(const Words& w) { return w[below(w.size())]; }

  std::string leaf(const std::string& tag, const std::string& word) {
    ++words_;
    return "(" + tag + " " + word + ")";
  }
  static std::string node(const std::string& label, const std::vector<std::string>& kids) {
    std::string out = "(" + label;
    for (const std::string& k : kids) out += " " + k;
    return out + ")";
  }
  std::string empty(const std::string& what) { return "(-NONE- " + what + ")"; }

  std::string top() {
    double r = static_cast<double>(below(1000)) / 1000.0;
    if (r < 0.12) return quoted();
    if (r < 0.22) return fronted();
    if (r < 0.30) return coordinated();
    return node("S", {subject(), predicate(2), leaf(".", ".")});
  }

  // (S `` (S-TPC-1 ...) , '' (NP-SBJ ...) (VP said (S *T*-1)) .)
  std::string quoted() {
    int id = ++trace_;
    std::string inner = node("S-TPC-" + std::to_string(id), {subject(), predicate(1)});
    return node("S", {leaf("``", "``"), inner, leaf(",", ","), leaf("''", "''"),
                      node("NP-SBJ", {leaf("NNP", pick(names_))}),
                      node("VP", {leaf("VBD", pick(say_)),
                                  node("S", {empty("*T*-" + std::to_string(id))})}),
                      leaf(".", ".")});
  }

  std::string fronted() {
    std::string pp = chance(0.5)
                         ? node("PP-TMP", {leaf("IN", "in"), node("NP", {leaf("CD", pick(years_))})})
                         : node("ADVP-TMP", {leaf("RB", pick(time_adverbs_))});
    return node("S", {pp, leaf(",", ","), subject(), predicate(1), leaf(".", ".")});
  }

  std::string coordinated() {
    std::string a = node("S", {subject(), predicate(0)});
    std::string b = node("S", {subject(), predicate(0)});
    return node("S", {a, leaf(",", ","), leaf("CC", pick(conj_)), b, leaf(".", ".")});
  }

  std::string subject() {
    double r = static_cast<double>(below(100)) / 100.0;
    if (r < 0.25) return node("NP-SBJ", {leaf("NNP", pick(names_))});
    if (r < 0.40) return node("NP-SBJ", {leaf("PRP", pick(pronouns_))});
    if (r < 0.52) {
      int id = ++trace_;
      return node("NP-SBJ", {node("NP", {leaf("DT", pick(det_)), leaf("NN", pick(people_))}),
                             relative(id)});
    }
    return node("NP-SBJ", noun_phrase_parts(people_, true));
  }

  // (SBAR (WHNP-1 (WDT that)) (S (NP-SBJ (-NONE- *T*-1)) (VP ...)))
  std::string relative(int id) {
    std::string verb = pick(chance(0.5) ? see_ : act_);
    return node("SBAR", {node("WHNP-" + std::to_string(id), {leaf("WDT", pick(rel_))}),
                         node("S", {node("NP-SBJ", {empty("*T*-" + std::to_string(id))}),
                                    node("VP", {leaf("VBD", verb), object()})})});
  }

  std::vector<std::string> noun_phrase_parts(const Words& nouns, bool allow_adj) {
    std::vector<std::string> kids{leaf("DT", pick(det_))};
    if (allow_adj && chance(0.3)) kids.push_back(leaf("JJ", pick(adjectives_)));
    kids.push_back(leaf("NN", pick(nouns)));
    return kids;
  }

  std::string object() {
    double r = static_cast<double>(below(100)) / 100.0;
    if (r < 0.15) return node("NP", {leaf("NNP", pick(names_))});
    if (r < 0.27) return node("NP", {leaf("CD", pick(numbers_)), leaf("NNS", pick(plural_things_))});
    if (r < 0.37)
      return node("NP", {node("NP", {leaf("DT", pick(det_)), leaf("NN", pick(things_))}),
                         node("PP", {leaf("IN", "of"), node("NP", noun_phrase_parts(things_, false))})});
    return node("NP", noun_phrase_parts(chance(0.5) ? people_ : things_, true));
  }

  // A prepositional phrase whose attachment follows the noun class.
  std::string with_phrase(bool instrument) {
    return node("PP", {leaf("IN", "with"),
                       node("NP", {leaf("DT", pick(det_)),
                                   leaf("NN", pick(instrument ? instruments_ : attributes_))})});
  }

  std::string locative() {
    return node("PP-LOC", {leaf("IN", pick(loc_preps_)),
                           node("NP", {leaf("DT", "the"), leaf("NN", pick(places_))})});
  }

  std::string predicate(int embed) {
    double r = static_cast<double>(below(100)) / 100.0;
    if (r < 0.50) return transitive(pick(chance(0.5) ? see_ : act_), "VBD");
    if (r < 0.62) return transitive(pick(trade_), "VBD");
    if (r < 0.72) {
      std::string vp = transitive(pick(chance(0.5) ? see_base_ : trade_base_), "VB");
      return node("VP", {leaf("MD", pick(modals_)), vp});
    }
    if (r < 0.82) {
      std::vector<std::string> kids{leaf("VBD", pick(intransitive_))};
      if (chance(0.6)) kids.push_back(locative());
      else kids.push_back(node("ADVP-MNR", {leaf("RB", pick(manner_))}));
      return node("VP", kids);
    }
    if (r < 0.90) {
      std::vector<std::string> adj{leaf("JJ", pick(adjectives_))};
      if (chance(0.3)) adj.insert(adj.begin(), leaf("RB", "very"));
      return node("VP", {leaf("VBD", "was"), node("ADJP-PRD", adj)});
    }
    if (embed > 0)
      return node("VP", {leaf("VBD", pick(say_)),
                         node("SBAR", {chance(0.5) ? leaf("IN", "that") : empty("0"),
                                       node("S", {subject(), predicate(embed - 1)})})});
    return transitive(pick(act_), "VBD");
  }

  // Verb, object and an optional with-phrase. Perception and action verbs
  // take instruments at VP level; trade verbs take attributes inside the NP.
  std::string transitive(const std::string& verb, const std::string& tag) {
    bool perception = contains(see_, verb) || contains(see_base_, verb) || contains(act_, verb);
    std::string obj = object();
    std::vector<std::string> kids{leaf(tag, verb)};
    double r = static_cast<double>(below(100)) / 100.0;
    if (r < 0.45) {
      bool instrument = perception ? chance(0.85) : chance(0.15);
      if (instrument) {
        kids.push_back(obj);
        kids.push_back(with_phrase(true));
      } else {
        kids.push_back(node("NP", {obj, with_phrase(false)}));
      }
    } else {
      kids.push_back(obj);
      if (r > 0.85) kids.push_back(locative());
    }
    return node("VP", kids);
  }

  static bool contains(const Words& w, const std::string& s) {
    for (const std::string& x : w)
      if (x == s) return true;
    return false;
  }

  std::mt19937_64 rng_;
  std::size_t words_ = 0;
  int trace_ = 0;

  const Words det_{"the", "a", "every", "this", "some"};
  const Words people_{"man", "woman", "teacher", "child", "farmer", "doctor", "pilot", "clerk"};
  const Words things_{"book", "letter", "box", "painting", "car", "house", "report", "bicycle"};
  const Words plural_things_{"books", "letters", "boxes", "cars", "houses", "reports"};
  const Words instruments_{"telescope", "camera", "hammer", "knife", "microscope", "rope"};
  const Words attributes_{"hat", "scarf", "garden", "window", "label", "beard"};
  const Words places_{"park", "station", "market", "office", "harbor", "village"};
  const Words names_{"Mary", "John", "Acme", "Boston", "Ellen", "Peter", "Susan", "Tokyo"};
  const Words pronouns_{"he", "she", "they", "we"};
  const Words adjectives_{"old", "red", "quiet", "big", "new", "happy", "small", "bright"};
  const Words see_{"saw", "watched", "observed", "noticed"};
  const Words see_base_{"see", "watch", "observe"};
  const Words act_{"hit", "cut", "tied", "opened"};
  const Words trade_{"bought", "sold", "wanted", "liked", "painted"};
  const Words trade_base_{"buy", "sell", "want", "like"};
  const Words intransitive_{"slept", "waited", "arrived", "smiled", "worked"};
  const Words say_{"said", "claimed", "reported"};
  const Words modals_{"will", "might", "could"};
  const Words rel_{"that", "which"};
  const Words loc_preps_{"in", "near", "at"};
  const Words manner_{"quickly", "slowly", "quietly"};
  const Words time_adverbs_{"yesterday", "today", "later"};
  const Words years_{"1987", "1989", "1990", "2001"};
  const Words numbers_{"2", "3", "12", "40"};
  const Words conj_{"and", "but"};
};

void write(const std::string& path, Generator& g, std::size_t n, std::size_t max_words) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t i = 0; i < n; ++i) out << g.sentence(max_words) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic Penn-style treebank generator"};
  std::string dir = ".";
  std::string prefix = "sample";
  std::uint64_t seed = 1;
  std::size_t train = 520, dev = 40, test = 60, max_words = 16;
  app.add_option("--out", dir, "output directory");
  app.add_option("--prefix", prefix, "file name prefix");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--train", train, "training trees");
  app.add_option("--dev", dev, "development trees");
  app.add_option("--test", test, "test trees");
  app.add_option("--max-words", max_words, "longest yield, punctuation included");
  CLI11_PARSE(app, argc, argv);
  try {
    Generator g(seed);
    write(dir + "/" + prefix + "_train.mrg", g, train, max_words);
    write(dir + "/" + prefix + "_dev.mrg", g, dev, max_words);
    write(dir + "/" + prefix + "_test.mrg", g, test, max_words);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
