#include "rpg/answer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

#include "rpg/number.hpp"

namespace rpg {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim_copy(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::string_view scale_name(Scale scale) {
  switch (scale) {
    case Scale::None: return "none";
    case Scale::Thousand: return "thousand";
    case Scale::Million: return "million";
    case Scale::Billion: return "billion";
    case Scale::Percent: return "percent";
  }
  return "none";
}

std::optional<Scale> parse_scale(std::string_view text) {
  std::string s = lower(trim_copy(text));
  if (s.empty() || s == "none") return Scale::None;
  if (s == "thousand") return Scale::Thousand;
  if (s == "million") return Scale::Million;
  if (s == "billion") return Scale::Billion;
  if (s == "percent") return Scale::Percent;
  return std::nullopt;
}

std::string_view answer_kind_name(AnswerKind kind) {
  switch (kind) {
    case AnswerKind::Span: return "SPAN";
    case AnswerKind::Spans: return "SPANS";
    case AnswerKind::Number: return "NUMBER";
    case AnswerKind::Count: return "COUNT";
  }
  return "SPAN";
}

std::optional<AnswerKind> parse_answer_kind(std::string_view text) {
  for (auto k : {AnswerKind::Span, AnswerKind::Spans, AnswerKind::Number,
                 AnswerKind::Count}) {
    if (text == answer_kind_name(k)) return k;
  }
  return std::nullopt;
}

std::string_view answer_source_name(AnswerSource source) {
  switch (source) {
    case AnswerSource::Table: return "table";
    case AnswerSource::Text: return "text";
    case AnswerSource::TableText: return "table-text";
  }
  return "text";
}

std::optional<AnswerSource> parse_answer_source(std::string_view text) {
  std::string s = lower(trim_copy(text));
  if (s == "table") return AnswerSource::Table;
  if (s == "text") return AnswerSource::Text;
  if (s == "table-text") return AnswerSource::TableText;
  return std::nullopt;
}

Answer make_text_answer(std::vector<std::string> items,
                        std::optional<Scale> scale) {
  std::vector<std::string> cleaned;
  cleaned.reserve(items.size());
  for (auto& item : items) cleaned.push_back(trim_copy(item));
  std::sort(cleaned.begin(), cleaned.end());
  cleaned.erase(std::unique(cleaned.begin(), cleaned.end()), cleaned.end());
  Answer a;
  a.kind = cleaned.size() >= 2 ? AnswerKind::Spans : AnswerKind::Span;
  a.payload = Text{std::move(cleaned)};
  a.scale = scale;
  return a;
}

Answer make_number_answer(double value, std::optional<Scale> scale) {
  return Answer{AnswerKind::Number, Number{value}, scale};
}

Answer make_count_answer(std::int64_t value, std::optional<Scale> scale) {
  return Answer{AnswerKind::Count, CountVal{value}, scale};
}

std::optional<double> numeric_value(const Answer& answer) {
  if (auto* n = std::get_if<Number>(&answer.payload)) return n->value;
  if (auto* c = std::get_if<CountVal>(&answer.payload)) {
    return static_cast<double>(c->value);
  }
  if (auto* t = std::get_if<Text>(&answer.payload)) {
    if (t->items.size() == 1) return parse_number(t->items.front());
  }
  return std::nullopt;
}

std::vector<std::string> normalized_tokens(std::string_view text) {
  static constexpr std::array<std::string_view, 3> kArticles = {"a", "an",
                                                               "the"};
  std::string stripped;
  stripped.reserve(text.size());
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) continue;
    stripped.push_back(static_cast<char>(std::tolower(u)));
  }
  std::istringstream in(stripped);
  std::vector<std::string> out;
  std::string word;
  while (in >> word) {
    if (std::find(kArticles.begin(), kArticles.end(), word) != kArticles.end()) {
      continue;
    }
    out.push_back(word);
  }
  return out;
}

std::string normalize_answer_text(std::string_view text) {
  std::string out;
  for (const auto& tok : normalized_tokens(text)) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

}  // namespace rpg
