#include "dop/treebank.hpp"

#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>

namespace dop {

Tree Tree::word(std::string w) {
  Tree t;
  t.label = std::move(w);
  t.terminal = true;
  return t;
}

Tree Tree::site(std::string label) {
  Tree t;
  t.label = std::move(label);
  return t;
}

Tree Tree::node(std::string label, std::vector<Tree> children) {
  Tree t;
  t.label = std::move(label);
  t.children = std::move(children);
  return t;
}

namespace {

void collect_yield(const Tree& t, std::vector<std::string>& out) {
  if (t.terminal) {
    out.push_back(t.label);
    return;
  }
  for (const Tree& c : t.children) collect_yield(c, out);
}

}  // namespace

std::vector<std::string> yield(const Tree& tree) {
  std::vector<std::string> out;
  collect_yield(tree, out);
  return out;
}

std::size_t nonterminal_node_count(const Tree& tree) {
  if (tree.terminal) return 0;
  std::size_t n = 1;
  for (const Tree& c : tree.children) n += nonterminal_node_count(c);
  return n;
}

int height(const Tree& tree) {
  int h = 0;
  for (const Tree& c : tree.children) h = std::max(h, height(c) + 1);
  return h;
}

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : Error(what + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
      line_(line),
      column_(column) {}

std::string SourceId::str() const { return file + ":" + std::to_string(index); }

DegenerateTreeError::DegenerateTreeError(SourceId source)
    : Error("normalization removed every word of tree " + source.str()),
      source_(std::move(source)) {}

void Corpus::push_back(Tree tree, SourceId source) {
  trees.push_back(std::move(tree));
  source_ids.push_back(std::move(source));
}

std::set<std::string> default_punctuation_tags() {
  return {",", ".", ":", "``", "''", "-NONE-"};
}

namespace {

struct Token {
  enum class Kind { open, close, atom, end };
  Kind kind = Kind::end;
  std::string_view text;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space();
    Token tok;
    tok.line = line_;
    tok.column = column_;
    if (pos_ >= text_.size()) return tok;
    char c = text_[pos_];
    if (c == '(' || c == ')') {
      tok.kind = c == '(' ? Token::Kind::open : Token::Kind::close;
      tok.text = text_.substr(pos_, 1);
      advance();
      return tok;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '(' &&
           text_[pos_] != ')')
      advance();
    tok.kind = Token::Kind::atom;
    tok.text = text_.substr(start, pos_ - start);
    return tok;
  }

 private:
  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  }
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }
  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) advance();
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

using LeafClassifier = std::function<bool(std::string_view)>;

class Reader {
 public:
  Reader(std::string_view text, LeafClassifier is_site)
      : lexer_(text), is_site_(std::move(is_site)) {}

  // Returns false at end of input.
  bool read_top(Tree& out) {
    Token tok = lexer_.next();
    if (tok.kind == Token::Kind::end) return false;
    if (tok.kind == Token::Kind::close)
      throw ParseError("unbalanced parentheses: unexpected ')'", tok.line, tok.column);
    if (tok.kind == Token::Kind::atom)
      throw ParseError("expected '(' before '" + std::string(tok.text) + "'", tok.line,
                       tok.column);
    Tree t = read_after_open(tok, true);
    if (t.label.empty()) {
      if (t.children.size() != 1 || t.children.front().is_leaf())
        throw ParseError("empty label where a nonterminal is required", tok.line, tok.column);
      Tree inner = std::move(t.children.front());
      out = std::move(inner);
    } else {
      out = std::move(t);
    }
    return true;
  }

 private:
  Tree read_after_open(const Token& open, bool top_level) {
    Tree node;
    Token tok = lexer_.next();
    bool labeled = false;
    if (tok.kind == Token::Kind::atom) {
      node.label = std::string(tok.text);
      labeled = true;
      tok = lexer_.next();
    } else if (!top_level) {
      throw ParseError("empty label where a nonterminal is required", open.line, open.column);
    }
    while (true) {
      switch (tok.kind) {
        case Token::Kind::end:
          throw ParseError("unbalanced parentheses: unclosed '('", open.line, open.column);
        case Token::Kind::close:
          if (node.children.empty())
            throw ParseError(labeled ? "node '" + node.label + "' has no children"
                                     : std::string("empty expression"),
                             open.line, open.column);
          return node;
        case Token::Kind::open:
          node.children.push_back(read_after_open(tok, false));
          break;
        case Token::Kind::atom: {
          std::string text(tok.text);
          if (is_site_ && is_site_(text))
            node.children.push_back(Tree::site(std::move(text)));
          else
            node.children.push_back(Tree::word(std::move(text)));
          break;
        }
      }
      tok = lexer_.next();
    }
  }

  Lexer lexer_;
  LeafClassifier is_site_;
};

}  // namespace

Corpus parse_bracketed(std::string_view text, std::string_view source_name) {
  Corpus corpus;
  Reader reader(text, nullptr);
  Tree t;
  std::size_t index = 0;
  while (reader.read_top(t)) corpus.push_back(std::move(t), {std::string(source_name), index++});
  return corpus;
}

Corpus read_treebank(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open treebank '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_bracketed(buf.str(), path.filename().string());
}

Tree parse_tree_with_sites(std::string_view text,
                           const std::function<bool(std::string_view)>& is_nonterminal) {
  Reader reader(text, is_nonterminal);
  Tree t;
  if (!reader.read_top(t)) throw ParseError("empty input", 1, 1);
  Tree extra;
  if (reader.read_top(extra)) throw ParseError("trailing input after tree", 1, 1);
  return t;
}

namespace {

void write_to(const Tree& t, std::string& out) {
  if (t.is_leaf()) {
    out += t.label;
    return;
  }
  out += '(';
  out += t.label;
  for (const Tree& c : t.children) {
    out += ' ';
    write_to(c, out);
  }
  out += ')';
}

}  // namespace

std::string write_bracketed(const Tree& tree) {
  std::string out;
  write_to(tree, out);
  return out;
}

std::string strip_function_tag(const std::string& label) {
  if (label.empty() || !std::isalpha(static_cast<unsigned char>(label[0]))) return label;
  std::size_t cut = label.find_first_of("-=");
  return cut == std::string::npos ? label : label.substr(0, cut);
}

std::string strip_coindex(const std::string& label) {
  std::string out = label;
  while (true) {
    std::size_t sep = out.find_last_of("-=");
    if (sep == std::string::npos || sep == 0 || sep + 1 == out.size()) return out;
    bool digits = true;
    for (std::size_t i = sep + 1; i < out.size(); ++i)
      digits = digits && std::isdigit(static_cast<unsigned char>(out[i]));
    if (!digits) return out;
    out.resize(sep);
  }
}

namespace {

bool is_quote_tag(const std::string& tag) { return tag == "``" || tag == "''"; }

std::optional<Tree> normalize_node(const Tree& t, const NormalizationConfig& cfg) {
  if (t.terminal) return t;
  if (t.is_preterminal()) {
    if (cfg.remove_empty_elements && t.label == "-NONE-") return std::nullopt;
    if (cfg.remove_quote_tokens && is_quote_tag(t.label)) return std::nullopt;
  }
  Tree out;
  out.label = t.label;
  if (cfg.strip_coindexing) out.label = strip_coindex(out.label);
  if (cfg.strip_function_tags) out.label = strip_function_tag(out.label);
  for (const Tree& c : t.children) {
    if (auto n = normalize_node(c, cfg)) out.children.push_back(std::move(*n));
  }
  if (out.children.empty()) return std::nullopt;
  return out;
}

}  // namespace

Tree normalize(const Tree& tree, const NormalizationConfig& config, const SourceId& source) {
  auto out = normalize_node(tree, config);
  if (!out || yield(*out).empty()) throw DegenerateTreeError(source);
  return std::move(*out);
}

Corpus normalize(const Corpus& corpus, const NormalizationConfig& config) {
  Corpus out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    SourceId id = i < corpus.source_ids.size() ? corpus.source_ids[i] : SourceId{"", i};
    out.push_back(normalize(corpus.trees[i], config, id), id);
  }
  return out;
}

}  // namespace dop
