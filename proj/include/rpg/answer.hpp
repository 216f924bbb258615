#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace rpg {

enum class Scale : std::uint8_t { None, Thousand, Million, Billion, Percent };

std::string_view scale_name(Scale scale);
// Accepts "", "none", "thousand", "million", "billion", "percent" (any case).
std::optional<Scale> parse_scale(std::string_view text);

enum class AnswerKind : std::uint8_t { Span, Spans, Number, Count };

std::string_view answer_kind_name(AnswerKind kind);
std::optional<AnswerKind> parse_answer_kind(std::string_view text);

enum class AnswerSource : std::uint8_t { Table, Text, TableText };

std::string_view answer_source_name(AnswerSource source);
std::optional<AnswerSource> parse_answer_source(std::string_view text);

struct Text {
  std::vector<std::string> items;
  bool operator==(const Text&) const = default;
};

struct Number {
  double value = 0.0;
  bool operator==(const Number&) const = default;
};

struct Pairs {
  std::vector<std::pair<std::string, double>> items;
  bool operator==(const Pairs&) const = default;
};

struct CountVal {
  std::int64_t value = 0;
  bool operator==(const CountVal&) const = default;
};

using Value = std::variant<Text, Number, Pairs, CountVal>;

struct Answer {
  AnswerKind kind = AnswerKind::Span;
  Value payload = Text{};
  std::optional<Scale> scale;

  bool operator==(const Answer&) const = default;
};

// Builds a SPAN (one distinct item) or SPANS (two or more) answer. Items are
// trimmed, deduplicated and sorted so equal span sets compare equal.
Answer make_text_answer(std::vector<std::string> items,
                        std::optional<Scale> scale = std::nullopt);
Answer make_number_answer(double value,
                          std::optional<Scale> scale = std::nullopt);
Answer make_count_answer(std::int64_t value,
                         std::optional<Scale> scale = std::nullopt);

// Numeric reading of an answer: Number and Count directly, a single text
// item when it parses as a number.
std::optional<double> numeric_value(const Answer& answer);

// Lower-case, drop punctuation and the articles a/an/the, collapse spaces.
std::string normalize_answer_text(std::string_view text);
std::vector<std::string> normalized_tokens(std::string_view text);

}  // namespace rpg
