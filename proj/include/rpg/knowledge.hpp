#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rpg/answer.hpp"

namespace rpg {

struct Cell {
  int row = 0;
  int col = 0;
  std::string text;
  std::optional<double> number;
  bool percent = false;

  bool operator==(const Cell&) const = default;
};

// Dense row-major grid of cells.
class Table {
 public:
  Table() = default;
  // Ragged input rows are padded with empty cells.
  static Table from_grid(const std::vector<std::vector<std::string>>& grid);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return cells_.empty(); }
  const Cell& at(int row, int col) const;
  const std::vector<Cell>& cells() const { return cells_; }
  std::vector<std::vector<std::string>> grid() const;

  bool operator==(const Table&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Cell> cells_;
};

struct Paragraph {
  int id = 0;
  std::string text;
  std::optional<double> rank_score;

  bool operator==(const Paragraph&) const = default;
};

struct HybridContext {
  std::string id;
  std::string question;
  Table table;
  std::vector<Paragraph> paragraphs;
  std::optional<Answer> gold_answer;
  std::optional<Scale> gold_scale;
  std::optional<std::string> derivation;
  std::optional<AnswerSource> answer_source;
  // Passage-only data (DROP style); selects the table-free legality profile.
  bool table_free = false;

  bool operator==(const HybridContext&) const = default;
};

enum class RegionKind : std::uint8_t { Question, TableCell, Paragraph, Separator };

struct Provenance {
  RegionKind kind = RegionKind::Separator;
  int row = -1;
  int col = -1;
  int paragraph = -1;

  auto operator<=>(const Provenance&) const = default;
};

struct Token {
  std::string surface;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  Provenance provenance;
  bool percent = false;

  bool operator==(const Token&) const = default;
};

// Whitespace and punctuation split; numeric literals with grouping commas,
// decimal point, currency prefix, trailing '%' and wrapping parentheses stay
// whole. Offsets are byte offsets into `text`.
std::vector<Token> tokenize(std::string_view text);

struct Region {
  Provenance provenance;
  int first = 0;
  int last = 0;
  int source = -1;  // index into LinearizedInput::sources, -1 for separators

  bool operator==(const Region&) const = default;
};

struct LinearizedInput {
  std::vector<Token> tokens;
  std::vector<Region> regions;
  std::vector<int> region_of;  // token index -> region index
  std::vector<std::string> sources;
  int table_rows = 0;
  int table_cols = 0;

  int size() const { return static_cast<int>(tokens.size()); }
  const Region& region_at(int token) const { return regions[region_of[token]]; }
  bool same_region(int s, int e) const {
    return region_of[s] == region_of[e];
  }
  // Source substring from token s to token e (same region, s <= e) with
  // whitespace runs collapsed to single spaces.
  std::string surface(int s, int e) const;

  bool operator==(const LinearizedInput&) const = default;
};

struct LinearizeConfig {
  std::size_t max_length = 2048;
};

// [<s>; question; </s>; table row-major; </s>; paragraphs; </s>]
LinearizedInput linearize(const HybridContext& ctx,
                          const LinearizeConfig& config = {});

// Token-F1 overlap with the question, descending, stable on ties. The
// returned paragraphs carry their score in rank_score.
std::vector<Paragraph> rank_paragraphs(std::string_view question,
                                       const std::vector<Paragraph>& paragraphs);

double token_overlap_f1(std::string_view a, std::string_view b);

// Structure-aware attention masks. Lower tier: table-cell tokens see only
// cells of their own row; upper tier adds cells of their own column. Any
// pair involving a non-cell token is visible in both tiers.
class AttentionMasks {
 public:
  AttentionMasks() = default;
  explicit AttentionMasks(int size)
      : size_(size),
        lower_(static_cast<std::size_t>(size) * size, 0),
        upper_(static_cast<std::size_t>(size) * size, 0) {}

  int size() const { return size_; }
  bool lower(int i, int j) const { return lower_[index(i, j)] != 0; }
  bool upper(int i, int j) const { return upper_[index(i, j)] != 0; }
  void set(int i, int j, bool lower_value, bool upper_value) {
    lower_[index(i, j)] = lower_value;
    upper_[index(i, j)] = upper_value;
  }
  const std::vector<std::uint8_t>& lower_data() const { return lower_; }
  const std::vector<std::uint8_t>& upper_data() const { return upper_; }

  bool operator==(const AttentionMasks&) const = default;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * size_ + j;
  }

  int size_ = 0;
  std::vector<std::uint8_t> lower_;
  std::vector<std::uint8_t> upper_;
};

// OpenMP over rows.
AttentionMasks build_attention_masks(const LinearizedInput& input);
// Single-threaded reference kept for tests and benchmarks.
AttentionMasks build_attention_masks_serial(const LinearizedInput& input);

}  // namespace rpg
