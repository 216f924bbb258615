#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace rpg {

struct ParsedNumber {
  double value = 0.0;
  bool percent = false;
};

// Financial-style numeric literal parsing: currency symbols ($, €, £) and
// thousands separators are dropped, "(x)" means -x, and a trailing '%' is
// stripped and reported through `percent`. Internal whitespace is never
// accepted.
std::optional<ParsedNumber> parse_number_ex(std::string_view surface);

inline std::optional<double> parse_number(std::string_view surface) {
  auto parsed = parse_number_ex(surface);
  if (!parsed) return std::nullopt;
  return parsed->value;
}

// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

// Rounds half away from zero to 4 decimal places.
double round4(double value);

}  // namespace rpg
