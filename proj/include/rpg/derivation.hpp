#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rpg {

// Infix arithmetic from an annotated derivation such as "(44.1-40.1)/40.1".
struct Expr {
  enum class Kind { Literal, Add, Sub, Mul, Div };

  Kind kind = Kind::Literal;
  double value = 0.0;
  std::string text;  // literal as written, without grouping commas
  std::vector<Expr> args;

  bool is_literal() const { return kind == Kind::Literal; }
  bool operator==(const Expr&) const = default;
};

// Accepts + - * / x × ÷, parentheses, unary minus, and literals with grouping
// commas, currency signs and trailing '%'. Returns nullopt on anything else.
std::optional<Expr> parse_derivation(std::string_view text);

// Items of a counting or multi-span derivation ("A##B##C").
std::vector<std::string> split_derivation_items(std::string_view text);

}  // namespace rpg
