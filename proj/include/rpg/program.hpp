#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rpg {

enum class Op : std::uint8_t {
  Span,
  Cell,
  Value,
  CellValue,
  Kv,
  Count,
  MultiSpans,
  ArgMax,
  ArgMin,
  Sum,
  Diff,
  Times,
  Div,
  Avg,
  ChangeR,
};

inline constexpr int kOpCount = 15;

inline constexpr Op kAllOps[kOpCount] = {
    Op::Span,   Op::Cell,   Op::Value, Op::CellValue, Op::Kv,
    Op::Count,  Op::MultiSpans, Op::ArgMax, Op::ArgMin, Op::Sum,
    Op::Diff,   Op::Times,  Op::Div,   Op::Avg,       Op::ChangeR};

constexpr bool is_atomic(Op op) {
  return op == Op::Span || op == Op::Cell || op == Op::Value ||
         op == Op::CellValue;
}
constexpr bool is_table_atomic(Op op) {
  return op == Op::Cell || op == Op::CellValue;
}
constexpr bool is_numeric_atomic(Op op) {
  return op == Op::Value || op == Op::CellValue;
}
// SUM, DIFF, TIMES, DIV, AVG, CHANGE_R.
constexpr bool is_arithmetic(Op op) {
  return op == Op::Sum || op == Op::Diff || op == Op::Times || op == Op::Div ||
         op == Op::Avg || op == Op::ChangeR;
}
constexpr bool is_commutative(Op op) {
  return op == Op::Sum || op == Op::Times || op == Op::Avg;
}

// Canonical surface name; CELL_VALUE prints as "CV".
std::string_view op_name(Op op);
// Accepts canonical names plus the long form "CELL_VALUE".
std::optional<Op> op_from_name(std::string_view name);

enum class Constant : std::uint8_t { Zero, One, Hundred };

inline constexpr Constant kAllConstants[3] = {Constant::Zero, Constant::One,
                                              Constant::Hundred};

constexpr int constant_value(Constant c) {
  switch (c) {
    case Constant::Zero: return 0;
    case Constant::One: return 1;
    case Constant::Hundred: return 100;
  }
  return 0;
}
std::optional<Constant> constant_from_value(long long value);

struct Node {
  enum class Kind : std::uint8_t { Atomic, Higher, Const };

  Kind kind = Kind::Const;
  Op op = Op::Span;
  int start = 0;
  int end = 0;
  Constant constant = Constant::Zero;
  std::vector<Node> args;

  static Node atomic(Op op, int start, int end);
  static Node higher(Op op, std::vector<Node> args);
  static Node constant_node(Constant c);

  bool is_atomic() const { return kind == Kind::Atomic; }
  bool is_higher() const { return kind == Kind::Higher; }
  bool is_const() const { return kind == Kind::Const; }

  bool operator==(const Node&) const = default;
};

struct Program {
  Node root;
  bool operator==(const Program&) const = default;
};

// node := OPNAME '(' INT ',' INT ')'        (atomic ops)
//       | OPNAME '(' node (',' node)* ')'   (higher-order ops)
//       | 0 | 1 | 100
Program parse_program(std::string_view text);
std::string print_program(const Program& program);
std::string print_node(const Node& node);

// Pre-order op names joined by '/', indices and constants elided.
std::string operation_signature(const Program& program);

// Number of tokens in the flattened program, BOS excluded and EOS included.
int decoding_length(const Program& program);

struct DecodingToken {
  enum class Kind : std::uint8_t { Bos, Eos, Close, Op, Pos, Const };

  Kind kind = Kind::Bos;
  rpg::Op op = rpg::Op::Span;
  int pos = 0;
  Constant constant = Constant::Zero;

  static DecodingToken bos() { return {Kind::Bos}; }
  static DecodingToken eos() { return {Kind::Eos}; }
  static DecodingToken close() { return {Kind::Close}; }
  static DecodingToken operation(rpg::Op o) { return {Kind::Op, o}; }
  static DecodingToken position(int p) {
    return {Kind::Pos, rpg::Op::Span, p};
  }
  static DecodingToken constant_token(Constant c) {
    return {Kind::Const, rpg::Op::Span, 0, c};
  }

  // Stable alphabet ids: BOS=0, EOS=1, CLOSE=2, OP=3..17 in Op order,
  // CONST 0/1/100 = 18/19/20, POS(i) = 21 + i.
  int id() const;
  static DecodingToken from_id(int id);
  // "BOS", "EOS", "CLOSE", "OP(DIFF)", "POS(12)", "CONST(100)".
  std::string to_string() const;
  static DecodingToken parse(std::string_view text);

  bool operator==(const DecodingToken& o) const { return id() == o.id(); }
  bool operator<(const DecodingToken& o) const { return id() < o.id(); }
};

inline constexpr int kPosIdBase = 21;

std::vector<DecodingToken> to_decoding_tokens(const Program& program);
Program from_decoding_tokens(std::span<const DecodingToken> tokens);
// Whitespace-separated token list, e.g. "BOS OP(DIFF) OP(CV) POS(3)".
std::vector<DecodingToken> parse_token_list(std::string_view text);

}  // namespace rpg
