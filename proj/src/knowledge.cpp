#include "rpg/knowledge.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

#include "rpg/error.hpp"
#include "rpg/number.hpp"

namespace rpg {
namespace {

constexpr std::string_view kEuro = "\xE2\x82\xAC";
constexpr std::string_view kPound = "\xC2\xA3";

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ascii_alnum(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 0x80 && (std::isalnum(u) != 0 || c == '_');
}

std::size_t currency_length(std::string_view text, std::size_t i) {
  if (i >= text.size()) return 0;
  if (text[i] == '$') return 1;
  if (text.substr(i).starts_with(kEuro)) return kEuro.size();
  if (text.substr(i).starts_with(kPound)) return kPound.size();
  return 0;
}

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

bool is_word_byte(std::string_view text, std::size_t i) {
  auto u = static_cast<unsigned char>(text[i]);
  if (u < 0x80) return is_ascii_alnum(text[i]);
  return currency_length(text, i) == 0;
}

// Length of the numeric literal starting at i, or 0.
std::size_t match_number(std::string_view text, std::size_t i) {
  const std::size_t n = text.size();
  std::size_t j = i;
  bool paren = false;
  if (j < n && text[j] == '(') {
    paren = true;
    ++j;
  }
  const bool sign_ok = i == 0 || is_space(text[i - 1]) || text[i - 1] == '(' ||
                       paren;
  if (j < n && text[j] == '-' && sign_ok) ++j;
  if (std::size_t c = currency_length(text, j)) {
    j += c;
    if (j < n && text[j] == '-') ++j;
  }
  if (j >= n) return 0;
  if (!is_digit(text[j]) &&
      !(text[j] == '.' && j + 1 < n && is_digit(text[j + 1]))) {
    return 0;
  }
  while (j < n && is_digit(text[j])) ++j;
  while (j + 1 < n && (text[j] == ',' || text[j] == '.') &&
         is_digit(text[j + 1])) {
    ++j;
    while (j < n && is_digit(text[j])) ++j;
  }
  if (j < n && text[j] == '%') ++j;
  if (paren) {
    if (j >= n || text[j] != ')') return 0;
    ++j;
  }
  // "10th", "3M" and friends are words, not numbers.
  if (j < n && is_word_byte(text, j)) return 0;
  return j - i;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

Token separator(std::string_view surface) {
  Token t;
  t.surface = std::string(surface);
  t.provenance.kind = RegionKind::Separator;
  return t;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t len = match_number(text, i);
    bool numeric = len > 0;
    if (!numeric) {
      if (is_word_byte(text, i)) {
        std::size_t j = i;
        while (j < n && !is_space(text[j]) && is_word_byte(text, j)) {
          j += utf8_length(static_cast<unsigned char>(text[j]));
        }
        len = std::min(j, n) - i;
      } else if (std::size_t c = currency_length(text, i)) {
        len = c;
      } else {
        len = std::min(utf8_length(static_cast<unsigned char>(text[i])), n - i);
      }
    }
    Token t;
    t.surface = std::string(text.substr(i, len));
    t.char_start = i;
    t.char_end = i + len;
    if (numeric) {
      if (auto parsed = parse_number_ex(t.surface)) t.percent = parsed->percent;
    }
    out.push_back(std::move(t));
    i += len;
  }
  return out;
}

Table Table::from_grid(const std::vector<std::vector<std::string>>& grid) {
  Table t;
  std::size_t cols = 0;
  for (const auto& row : grid) cols = std::max(cols, row.size());
  if (cols == 0) return t;
  t.rows_ = static_cast<int>(grid.size());
  t.cols_ = static_cast<int>(cols);
  t.cells_.reserve(grid.size() * cols);
  for (int r = 0; r < t.rows_; ++r) {
    for (int c = 0; c < t.cols_; ++c) {
      Cell cell;
      cell.row = r;
      cell.col = c;
      if (static_cast<std::size_t>(c) < grid[r].size()) cell.text = grid[r][c];
      if (auto parsed = parse_number_ex(cell.text)) {
        cell.number = parsed->value;
        cell.percent = parsed->percent;
      }
      t.cells_.push_back(std::move(cell));
    }
  }
  return t;
}

const Cell& Table::at(int row, int col) const {
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_) {
    throw std::out_of_range("cell (" + std::to_string(row) + "," +
                            std::to_string(col) + ") outside table");
  }
  return cells_[static_cast<std::size_t>(row) * cols_ + col];
}

std::vector<std::vector<std::string>> Table::grid() const {
  std::vector<std::vector<std::string>> g(rows_);
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) g[r].push_back(at(r, c).text);
  }
  return g;
}

std::string LinearizedInput::surface(int s, int e) const {
  const Region& region = region_at(s);
  if (region.source < 0) return tokens[s].surface;
  const std::string& src = sources[region.source];
  std::size_t b = tokens[s].char_start;
  std::size_t end = tokens[e].char_end;
  return collapse_whitespace(std::string_view(src).substr(b, end - b));
}

LinearizedInput linearize(const HybridContext& ctx,
                          const LinearizeConfig& config) {
  LinearizedInput out;
  out.table_rows = ctx.table.rows();
  out.table_cols = ctx.table.cols();

  auto add_separator = [&](std::string_view surface) {
    Region region;
    region.first = region.last = static_cast<int>(out.tokens.size());
    out.region_of.push_back(static_cast<int>(out.regions.size()));
    out.regions.push_back(region);
    out.tokens.push_back(separator(surface));
  };
  auto add_unit = [&](const std::string& text, Provenance prov) {
    auto toks = tokenize(text);
    if (toks.empty()) return;
    Region region;
    region.provenance = prov;
    region.source = static_cast<int>(out.sources.size());
    region.first = static_cast<int>(out.tokens.size());
    region.last = region.first + static_cast<int>(toks.size()) - 1;
    out.sources.push_back(text);
    const int region_index = static_cast<int>(out.regions.size());
    out.regions.push_back(region);
    for (auto& t : toks) {
      t.provenance = prov;
      out.region_of.push_back(region_index);
      out.tokens.push_back(std::move(t));
    }
  };

  add_separator("<s>");
  add_unit(ctx.question, Provenance{RegionKind::Question});
  add_separator("</s>");
  for (const Cell& cell : ctx.table.cells()) {
    add_unit(cell.text, Provenance{RegionKind::TableCell, cell.row, cell.col});
  }
  add_separator("</s>");

  std::vector<const Paragraph*> order;
  for (const auto& p : ctx.paragraphs) order.push_back(&p);
  bool ranked = !order.empty() &&
                std::all_of(order.begin(), order.end(),
                            [](const Paragraph* p) { return p->rank_score.has_value(); });
  if (ranked) {
    std::stable_sort(order.begin(), order.end(),
                     [](const Paragraph* a, const Paragraph* b) {
                       if (*a->rank_score != *b->rank_score) {
                         return *a->rank_score > *b->rank_score;
                       }
                       return a->id < b->id;
                     });
  }
  for (const Paragraph* p : order) {
    add_unit(p->text, Provenance{RegionKind::Paragraph, -1, -1, p->id});
  }
  add_separator("</s>");

  if (out.tokens.size() > config.max_length) {
    throw OversizeContext(out.tokens.size(), config.max_length);
  }
  return out;
}

double token_overlap_f1(std::string_view a, std::string_view b) {
  auto ta = normalized_tokens(a);
  auto tb = normalized_tokens(b);
  if (ta.empty() || tb.empty()) return 0.0;
  std::map<std::string, int> bag;
  for (const auto& t : ta) ++bag[t];
  int common = 0;
  for (const auto& t : tb) {
    auto it = bag.find(t);
    if (it != bag.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  double precision = static_cast<double>(common) / tb.size();
  double recall = static_cast<double>(common) / ta.size();
  return 2 * precision * recall / (precision + recall);
}

std::vector<Paragraph> rank_paragraphs(std::string_view question,
                                       const std::vector<Paragraph>& paragraphs) {
  std::vector<Paragraph> out = paragraphs;
  for (auto& p : out) p.rank_score = token_overlap_f1(question, p.text);
  std::stable_sort(out.begin(), out.end(),
                   [](const Paragraph& a, const Paragraph& b) {
                     return *a.rank_score > *b.rank_score;
                   });
  return out;
}

namespace {

struct CellCoords {
  std::vector<int> row;
  std::vector<int> col;
};

CellCoords cell_coords(const LinearizedInput& input) {
  CellCoords cc;
  cc.row.assign(input.tokens.size(), -1);
  cc.col.assign(input.tokens.size(), -1);
  for (std::size_t i = 0; i < input.tokens.size(); ++i) {
    const auto& p = input.tokens[i].provenance;
    if (p.kind == RegionKind::TableCell) {
      cc.row[i] = p.row;
      cc.col[i] = p.col;
    }
  }
  return cc;
}

inline void fill_row(AttentionMasks& m, const CellCoords& cc, int i, int n) {
  const int ri = cc.row[i];
  const int ci = cc.col[i];
  for (int j = 0; j < n; ++j) {
    if (ri < 0 || cc.row[j] < 0) {
      m.set(i, j, true, true);
      continue;
    }
    const bool same_row = ri == cc.row[j];
    m.set(i, j, same_row, same_row || ci == cc.col[j]);
  }
}

}  // namespace

AttentionMasks build_attention_masks(const LinearizedInput& input) {
  const int n = input.size();
  AttentionMasks m(n);
  const CellCoords cc = cell_coords(input);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) fill_row(m, cc, i, n);
  return m;
}

AttentionMasks build_attention_masks_serial(const LinearizedInput& input) {
  const int n = input.size();
  AttentionMasks m(n);
  for (int i = 0; i < n; ++i) {
    const auto& pi = input.tokens[i].provenance;
    for (int j = 0; j < n; ++j) {
      const auto& pj = input.tokens[j].provenance;
      const bool ci = pi.kind == RegionKind::TableCell;
      const bool cj = pj.kind == RegionKind::TableCell;
      if (!ci || !cj) {
        m.set(i, j, true, true);
      } else {
        m.set(i, j, pi.row == pj.row, pi.row == pj.row || pi.col == pj.col);
      }
    }
  }
  return m;
}

}  // namespace rpg
