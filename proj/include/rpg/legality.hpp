#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rpg/knowledge.hpp"
#include "rpg/program.hpp"

namespace rpg {

struct LegalityConfig {
  int max_span_length = 48;
  int max_avg_args = 3;
  int max_variadic_args = 16;
  int max_program_tokens = 50;  // tokens after BOS, EOS included
  std::uint32_t disabled_ops = 0;  // bit i set disables Op i

  bool enabled(Op op) const {
    return (disabled_ops & (1u << static_cast<unsigned>(op))) == 0;
  }
  void disable(Op op) { disabled_ops |= 1u << static_cast<unsigned>(op); }
  // Throws ConfigError unless every limit is positive.
  void check() const;

  // Passage-only profile: no table extraction, no TIMES/DIV.
  static LegalityConfig table_free_profile(LegalityConfig base);
  static LegalityConfig table_free_profile();

  bool operator==(const LegalityConfig&) const = default;
};

enum class ConstraintFamily : std::uint8_t { Index, Type, Composition };

std::string_view constraint_family_name(ConstraintFamily family);

struct Violation {
  ConstraintFamily family = ConstraintFamily::Composition;
  std::string path;  // "root", "root.0", "root.0.1", ...
  std::string message;

  bool operator==(const Violation&) const = default;
  auto operator<=>(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;  // sorted

  bool ok() const { return violations.empty(); }
  bool has(ConstraintFamily family) const;
};

// Checks that need no context: index order, span length, arity, argument
// types, root kind, disabled ops and the decoding budget.
ValidationReport validate_structure(const Program& program,
                                    const LegalityConfig& config);

// Adds the context checks: indices inside the sequence, single-region
// containment per atomic kind, and numeric parsing for VALUE/CV.
ValidationReport validate(const Program& program, const LinearizedInput& input,
                          const LegalityConfig& config);

// Every (start, end) pair each atomic operation may take on one input.
class RangeIndex {
 public:
  RangeIndex(const LinearizedInput& input, const LegalityConfig& config);

  int size() const { return size_; }
  // Sorted valid end positions of `kind` starting at `start`.
  const std::vector<int>& ends(Op kind, int start) const;
  bool valid(Op kind, int start, int end) const;
  std::size_t count(Op kind) const { return counts_[slot(kind)]; }
  // Distinct ranges valid for at least one enabled atomic kind.
  std::size_t union_count() const { return union_count_; }

 private:
  static int slot(Op kind) { return static_cast<int>(kind); }

  int size_ = 0;
  std::vector<std::vector<int>> ends_[4];
  std::size_t counts_[4] = {0, 0, 0, 0};
  std::size_t union_count_ = 0;
};

// Incremental legal-next-token oracle. Offers exactly the tokens after which
// some complete valid program still fits the token budget. Single owner;
// copies are independent and cheap (the range index is shared).
class LegalitySession {
 public:
  LegalitySession(std::shared_ptr<const RangeIndex> index,
                  const LegalityConfig& config);

  std::vector<DecodingToken> legal_next() const;
  bool is_legal(const DecodingToken& token) const;
  // Throws IllegalToken when `token` is not currently legal.
  void advance(const DecodingToken& token);
  LegalitySession advanced(const DecodingToken& token) const;

  bool closed() const { return closed_; }
  bool dead_end() const { return !closed_ && legal_next().empty(); }
  const std::vector<DecodingToken>& prefix() const { return prefix_; }
  // The finished program once EOS has been consumed.
  const std::optional<Program>& program() const { return program_; }
  const LegalityConfig& config() const { return config_; }

 private:
  struct Frame {
    Op op = Op::Sum;
    int nargs = 0;
    Op kv_key = Op::Cell;
    std::vector<std::pair<int, int>> used;
    Node node;
  };
  struct Pending {
    bool active = false;
    Op kind = Op::Span;
    int start = -1;
  };

  int fresh_cost(Op op) const;
  int required_cost(Op op, int nargs) const;
  int frame_rest(const Frame& f) const { return required_cost(f.op, f.nargs) + 1; }
  int rest_total() const;
  int min_args(Op op) const;
  int max_args(Op op) const;
  bool kv_feasible() const;
  bool collects(const Frame& f) const {
    return f.op == Op::Count || f.op == Op::MultiSpans;
  }
  bool range_used(const Frame* f, int s, int e) const;
  std::size_t available(const Frame& f, Op kind) const;
  void attach(Node node);

  std::shared_ptr<const RangeIndex> index_;
  LegalityConfig config_;
  std::vector<DecodingToken> prefix_;
  std::vector<Frame> stack_;
  Pending pending_;
  bool root_done_ = false;
  bool closed_ = false;
  std::optional<Node> root_;
  std::optional<Program> program_;
};

LegalitySession open_session(const LinearizedInput& input,
                             const LegalityConfig& config);

}  // namespace rpg
