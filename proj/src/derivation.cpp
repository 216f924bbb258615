#include "rpg/derivation.hpp"

#include <cctype>

#include "rpg/number.hpp"

namespace rpg {
namespace {

class InfixParser {
 public:
  explicit InfixParser(std::string_view text) : text_(text) {}

  std::optional<Expr> run() {
    auto e = sum();
    skip();
    if (!e || pos_ != text_.size()) return std::nullopt;
    return e;
  }

 private:
  void skip() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool eat(std::string_view s) {
    skip();
    if (text_.substr(pos_, s.size()) == s) {
      pos_ += s.size();
      return true;
    }
    return false;
  }

  static Expr binary(Expr::Kind kind, Expr a, Expr b) {
    Expr e;
    e.kind = kind;
    e.args.push_back(std::move(a));
    e.args.push_back(std::move(b));
    return e;
  }

  std::optional<Expr> sum() {
    auto lhs = product();
    while (lhs) {
      Expr::Kind kind;
      if (eat("+")) {
        kind = Expr::Kind::Add;
      } else if (eat("-") || eat("−")) {
        kind = Expr::Kind::Sub;
      } else {
        break;
      }
      auto rhs = product();
      if (!rhs) return std::nullopt;
      lhs = binary(kind, std::move(*lhs), std::move(*rhs));
    }
    return lhs;
  }

  std::optional<Expr> product() {
    auto lhs = unary();
    while (lhs) {
      Expr::Kind kind;
      if (eat("*") || eat("×") || eat("x") || eat("X")) {
        kind = Expr::Kind::Mul;
      } else if (eat("/") || eat("÷")) {
        kind = Expr::Kind::Div;
      } else {
        break;
      }
      auto rhs = unary();
      if (!rhs) return std::nullopt;
      lhs = binary(kind, std::move(*lhs), std::move(*rhs));
    }
    return lhs;
  }

  std::optional<Expr> unary() {
    if (eat("-")) {
      auto inner = unary();
      if (!inner) return std::nullopt;
      if (inner->is_literal()) {
        inner->value = -inner->value;
        inner->text = "-" + inner->text;
        return inner;
      }
      Expr zero;
      zero.text = "0";
      return binary(Expr::Kind::Sub, std::move(zero), std::move(*inner));
    }
    if (eat("(")) {
      auto inner = sum();
      if (!inner || !eat(")")) return std::nullopt;
      return inner;
    }
    return literal();
  }

  std::optional<Expr> literal() {
    skip();
    std::size_t start = pos_;
    auto is_lit = [](char c) {
      return std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
             c == ',' || c == '%' || c == '$';
    };
    while (pos_ < text_.size() && is_lit(text_[pos_])) ++pos_;
    // Grouping commas are followed by a digit; anything else ends the literal.
    std::string raw(text_.substr(start, pos_ - start));
    while (!raw.empty() && raw.back() == ',') {
      raw.pop_back();
      --pos_;
    }
    auto parsed = parse_number_ex(raw);
    if (raw.empty() || !parsed) return std::nullopt;
    Expr e;
    e.value = parsed->value;
    for (char c : raw) {
      if (c != ',' && c != '$' && c != '%') e.text += c;
    }
    return e;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::optional<Expr> parse_derivation(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    return std::nullopt;
  }
  return InfixParser(text).run();
}

std::vector<std::string> split_derivation_items(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = text.find("##", pos);
    std::string item = trim(text.substr(pos, next == std::string_view::npos
                                                  ? std::string_view::npos
                                                  : next - pos));
    if (!item.empty()) out.push_back(std::move(item));
    if (next == std::string_view::npos) break;
    pos = next + 2;
  }
  return out;
}

}  // namespace rpg
