#include "rpg/number.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace rpg {
namespace {

constexpr std::array<std::string_view, 3> kCurrency = {"$", "\xE2\x82\xAC",
                                                       "\xC2\xA3"};

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view trim(std::string_view s) {
  auto ws = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

bool strip_currency(std::string_view& s) {
  for (auto sym : kCurrency) {
    if (s.starts_with(sym)) {
      s.remove_prefix(sym.size());
      return true;
    }
  }
  return false;
}

bool strip_sign(std::string_view& s, bool& negative) {
  if (s.empty()) return false;
  if (s.front() == '-') {
    negative = !negative;
    s.remove_prefix(1);
    return true;
  }
  if (s.front() == '+') {
    s.remove_prefix(1);
    return true;
  }
  return false;
}

// Accepts digits with ',' between digit runs and at most one '.'.
std::optional<std::string> numeric_body(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string out;
  bool seen_dot = false;
  bool seen_digit = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (is_digit(c)) {
      out.push_back(c);
      seen_digit = true;
    } else if (c == ',') {
      if (seen_dot || i == 0 || i + 1 >= s.size() || !is_digit(s[i - 1]) ||
          !is_digit(s[i + 1])) {
        return std::nullopt;
      }
    } else if (c == '.') {
      if (seen_dot) return std::nullopt;
      seen_dot = true;
      out.push_back(c);
    } else {
      return std::nullopt;
    }
  }
  if (!seen_digit) return std::nullopt;
  return out;
}

}  // namespace

std::optional<ParsedNumber> parse_number_ex(std::string_view surface) {
  std::string_view s = trim(surface);
  if (s.empty()) return std::nullopt;

  bool negative = false;
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')') {
    negative = true;
    s = s.substr(1, s.size() - 2);
  }
  ParsedNumber result;
  if (!s.empty() && s.back() == '%') {
    result.percent = true;
    s.remove_suffix(1);
  }
  bool signed_ = strip_sign(s, negative);
  if (strip_currency(s) && !signed_) strip_sign(s, negative);

  auto body = numeric_body(s);
  if (!body) return std::nullopt;
  double value = 0.0;
  const char* first = body->data();
  const char* last = first + body->size();
  // "5." and ".5" are both fine for from_chars in general format except a
  // bare trailing dot, which we normalise away.
  if (body->back() == '.') --last;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  result.value = negative ? -value : value;
  return result;
}

std::string format_number(double value) {
  std::array<char, 512> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                               std::chars_format::fixed);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

double round4(double value) { return std::round(value * 1e4) / 1e4; }

}  // namespace rpg
