#pragma once

// Minimal s-expression reader with line/column tracking. `;` starts a comment
// that runs to the end of the line. Double-quoted strings support \" and \\.

#include <string>
#include <string_view>
#include <vector>

#include "resplan/error.hpp"

namespace resplan::sexpr {

struct Node {
  enum class Kind { symbol, string, list };

  Kind kind = Kind::symbol;
  std::string text;  // symbol or string contents
  std::vector<Node> items;
  SourceLocation where;

  bool is_list() const { return kind == Kind::list; }
  bool is_symbol() const { return kind == Kind::symbol; }
  bool is_symbol(std::string_view s) const { return kind == Kind::symbol && text == s; }
  bool is_string() const { return kind == Kind::string; }

  /// Head symbol of a non-empty list whose first item is a symbol, else "".
  std::string head() const;

  /// Numeric readings of a symbol; throw ParseError at this node otherwise.
  int as_int() const;
  double as_double() const;
  const std::string& as_symbol() const;
};

std::vector<Node> parse_all(std::string_view text, SourceLocation origin = {1, 1});

/// Exactly one top-level expression.
Node parse_one(std::string_view text);

std::string render(const Node& n);

/// Symbol/list constructors for building output trees.
Node symbol(std::string s);
Node string(std::string s);
Node list(std::vector<Node> items);

[[noreturn]] void fail(const Node& at, const std::string& message);

}  // namespace resplan::sexpr
