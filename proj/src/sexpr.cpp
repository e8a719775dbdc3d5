#include "resplan/sexpr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace resplan::sexpr {

namespace {

class Reader {
 public:
  Reader(std::string_view text, SourceLocation origin) : text_(text), line_(origin.line), column_(origin.column) {}

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  Node read() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError(here(), "unexpected end of input");
    const SourceLocation start = here();
    const char c = text_[pos_];
    if (c == '(') {
      advance();
      Node n;
      n.kind = Node::Kind::list;
      n.where = start;
      while (true) {
        skip_space();
        if (pos_ >= text_.size()) throw ParseError(start, "unclosed '('");
        if (text_[pos_] == ')') {
          advance();
          return n;
        }
        n.items.push_back(read());
      }
    }
    if (c == ')') throw ParseError(start, "unexpected ')'");
    if (c == '"') return read_string(start);
    Node n;
    n.kind = Node::Kind::symbol;
    n.where = start;
    while (pos_ < text_.size()) {
      const char d = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';' || d == '"') break;
      n.text.push_back(d);
      advance();
    }
    return n;
  }

 private:
  Node read_string(SourceLocation start) {
    advance();
    Node n;
    n.kind = Node::Kind::string;
    n.where = start;
    while (true) {
      if (pos_ >= text_.size()) throw ParseError(start, "unterminated string");
      char c = text_[pos_];
      advance();
      if (c == '"') return n;
      if (c == '\\') {
        if (pos_ >= text_.size()) throw ParseError(start, "unterminated string");
        c = text_[pos_];
        advance();
        if (c == 'n') c = '\n';
      }
      n.text.push_back(c);
    }
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
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

  SourceLocation here() const { return {line_, column_}; }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_;
  int column_;
};

bool needs_quotes(const std::string& s) {
  if (s.empty()) return true;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ';' || c == '"') return true;
  }
  return false;
}

}  // namespace

std::string Node::head() const {
  if (kind != Kind::list || items.empty() || !items.front().is_symbol()) return {};
  return items.front().text;
}

int Node::as_int() const {
  if (kind == Kind::symbol) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc() && ptr == text.data() + text.size()) return value;
  }
  fail(*this, "expected an integer");
}

double Node::as_double() const {
  if (kind == Kind::symbol && !text.empty()) {
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end == text.c_str() + text.size() && std::isfinite(value)) return value;
  }
  fail(*this, "expected a number");
}

const std::string& Node::as_symbol() const {
  if (kind != Kind::symbol) fail(*this, "expected a symbol");
  return text;
}

std::vector<Node> parse_all(std::string_view text, SourceLocation origin) {
  Reader reader(text, origin);
  std::vector<Node> out;
  while (!reader.at_end()) out.push_back(reader.read());
  return out;
}

Node parse_one(std::string_view text) {
  auto all = parse_all(text);
  if (all.empty()) throw ParseError({1, 1}, "empty input");
  if (all.size() > 1) throw ParseError(all[1].where, "trailing input after expression");
  return std::move(all.front());
}

std::string render(const Node& n) {
  switch (n.kind) {
    case Node::Kind::symbol:
      return n.text;
    case Node::Kind::string: {
      std::string out = "\"";
      for (char c : n.text) {
        if (c == '"' || c == '\\') out.push_back('\\');
        if (c == '\n') {
          out += "\\n";
          continue;
        }
        out.push_back(c);
      }
      return out + "\"";
    }
    case Node::Kind::list: {
      std::string out = "(";
      for (std::size_t i = 0; i < n.items.size(); ++i) {
        if (i) out.push_back(' ');
        out += render(n.items[i]);
      }
      return out + ")";
    }
  }
  return {};
}

Node symbol(std::string s) {
  Node n;
  n.kind = needs_quotes(s) ? Node::Kind::string : Node::Kind::symbol;
  n.text = std::move(s);
  return n;
}

Node string(std::string s) {
  Node n;
  n.kind = Node::Kind::string;
  n.text = std::move(s);
  return n;
}

Node list(std::vector<Node> items) {
  Node n;
  n.kind = Node::Kind::list;
  n.items = std::move(items);
  return n;
}

void fail(const Node& at, const std::string& message) { throw ParseError(at.where, message); }

}  // namespace resplan::sexpr
