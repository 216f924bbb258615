#include "rpg/legality.hpp"

#include <algorithm>
#include <limits>

#include "rpg/error.hpp"
#include "rpg/number.hpp"

namespace rpg {

void LegalityConfig::check() const {
  if (max_span_length <= 0 || max_avg_args <= 0 || max_variadic_args <= 0 ||
      max_program_tokens <= 0) {
    throw ConfigError("legality limits must all be positive");
  }
}

LegalityConfig LegalityConfig::table_free_profile(LegalityConfig base) {
  base.disable(Op::Cell);
  base.disable(Op::CellValue);
  base.disable(Op::Times);
  base.disable(Op::Div);
  return base;
}

LegalityConfig LegalityConfig::table_free_profile() {
  return table_free_profile(LegalityConfig{});
}

std::string_view constraint_family_name(ConstraintFamily family) {
  switch (family) {
    case ConstraintFamily::Index: return "index";
    case ConstraintFamily::Type: return "type";
    case ConstraintFamily::Composition: return "composition";
  }
  return "composition";
}

bool ValidationReport::has(ConstraintFamily family) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.family == family; });
}

// ---------------------------------------------------------------------------
// Batch validation: a plain recursive walk over the tree.

namespace {

enum class Slot { Root, Arith, KvKey, KvValue, KvPair, Collect };

class Validator {
 public:
  Validator(const LegalityConfig& config, const LinearizedInput* input)
      : config_(config), input_(input) {}

  ValidationReport run(const Program& program) {
    check(program.root, "root", Slot::Root, Op::Cell);
    int length = decoding_length(program);
    if (length > config_.max_program_tokens) {
      add(ConstraintFamily::Composition, "root",
          "program needs " + std::to_string(length) +
              " decoding steps, limit is " +
              std::to_string(config_.max_program_tokens));
    }
    std::sort(report_.violations.begin(), report_.violations.end());
    return std::move(report_);
  }

 private:
  void add(ConstraintFamily f, const std::string& path, std::string message) {
    report_.violations.push_back({f, path, std::move(message)});
  }

  static std::string name(const Node& n) {
    return n.is_const() ? "constant" : std::string(op_name(n.op));
  }

  void check_slot(const Node& n, const std::string& path, Slot slot,
                  Op kv_key) {
    auto reject = [&](const std::string& why) {
      add(ConstraintFamily::Composition, path, name(n) + " " + why);
    };
    switch (slot) {
      case Slot::Root:
        if (n.is_const()) reject("cannot be the whole program");
        else if (n.op == Op::Kv) reject("cannot be the first program unit");
        break;
      case Slot::Arith:
        if (!n.is_const() && !is_numeric_atomic(n.op) && !is_arithmetic(n.op)) {
          reject("is not a numeric argument");
        }
        break;
      case Slot::KvKey:
        if (n.is_const() || (n.op != Op::Cell && n.op != Op::Span)) {
          reject("cannot be a KV key (CELL or SPAN)");
        }
        break;
      case Slot::KvValue: {
        Op want = kv_key == Op::Cell ? Op::CellValue : Op::Value;
        if (n.is_const() || n.op != want) {
          reject("cannot pair with a " + std::string(op_name(kv_key)) +
                 " key (expects " + std::string(op_name(want)) + ")");
        }
        break;
      }
      case Slot::KvPair:
        if (n.is_const() || n.op != Op::Kv) reject("is not a KV pair");
        break;
      case Slot::Collect:
        if (n.is_const() || !is_atomic(n.op)) {
          reject("is not an atomic operation");
        }
        break;
    }
  }

  void check(const Node& n, const std::string& path, Slot slot, Op kv_key) {
    check_slot(n, path, slot, kv_key);
    if (n.is_const()) return;
    if (!config_.enabled(n.op)) {
      add(ConstraintFamily::Composition, path,
          std::string(op_name(n.op)) + " is disabled in this profile");
    }
    if (n.is_atomic()) {
      check_atomic(n, path);
      return;
    }
    check_arity(n, path);
    for (std::size_t i = 0; i < n.args.size(); ++i) {
      const std::string child = path + "." + std::to_string(i);
      Slot child_slot = Slot::Arith;
      Op key = Op::Cell;
      switch (n.op) {
        case Op::Kv:
          if (i == 0) {
            child_slot = Slot::KvKey;
          } else {
            child_slot = Slot::KvValue;
            const Node& k = n.args[0];
            key = (!k.is_const() && k.op == Op::Span) ? Op::Span : Op::Cell;
            if (k.is_const() || (k.op != Op::Cell && k.op != Op::Span)) {
              // The key is already reported; any numeric atomic is accepted.
              child_slot = Slot::Collect;
            }
          }
          break;
        case Op::ArgMax:
        case Op::ArgMin:
          child_slot = Slot::KvPair;
          break;
        case Op::Count:
        case Op::MultiSpans:
          child_slot = Slot::Collect;
          break;
        default:
          child_slot = Slot::Arith;
          break;
      }
      check(n.args[i], child, child_slot, key);
    }
    if (n.op == Op::Count || n.op == Op::MultiSpans) check_distinct(n, path);
  }

  void check_arity(const Node& n, const std::string& path) {
    int lo = 2;
    int hi = 2;
    switch (n.op) {
      case Op::Avg: hi = config_.max_avg_args; break;
      case Op::ArgMax:
      case Op::ArgMin:
      case Op::MultiSpans: hi = config_.max_variadic_args; break;
      case Op::Count: lo = 1; hi = config_.max_variadic_args; break;
      default: break;
    }
    const int k = static_cast<int>(n.args.size());
    if (k < lo || k > hi) {
      add(ConstraintFamily::Composition, path,
          std::string(op_name(n.op)) + " takes " + std::to_string(lo) + ".." +
              std::to_string(hi) + " arguments, got " + std::to_string(k));
    }
  }

  void check_distinct(const Node& n, const std::string& path) {
    for (std::size_t i = 0; i < n.args.size(); ++i) {
      for (std::size_t j = i + 1; j < n.args.size(); ++j) {
        const Node& a = n.args[i];
        const Node& b = n.args[j];
        if (a.is_atomic() && b.is_atomic() && a.start == b.start &&
            a.end == b.end) {
          add(ConstraintFamily::Index, path,
              "items " + std::to_string(i) + " and " + std::to_string(j) +
                  " extract the same range");
        }
      }
    }
  }

  void check_atomic(const Node& n, const std::string& path) {
    const std::string op(op_name(n.op));
    bool indices_ok = true;
    if (n.start < 0 || n.end < 0) {
      add(ConstraintFamily::Index, path, op + " has a negative index");
      indices_ok = false;
    } else if (n.end < n.start) {
      add(ConstraintFamily::Index, path,
          op + " end index " + std::to_string(n.end) +
              " precedes start index " + std::to_string(n.start));
      indices_ok = false;
    }
    if (n.op == Op::Span && indices_ok &&
        n.end - n.start >= config_.max_span_length) {
      add(ConstraintFamily::Index, path,
          "SPAN covers " + std::to_string(n.end - n.start + 1) +
              " tokens, limit is " + std::to_string(config_.max_span_length));
    }
    if (!input_) return;
    if (indices_ok && n.end >= input_->size()) {
      add(ConstraintFamily::Index, path,
          op + " index " + std::to_string(n.end) + " is outside the input of " +
              std::to_string(input_->size()) + " tokens");
      indices_ok = false;
    }
    if (!indices_ok) return;

    if (!input_->same_region(n.start, n.end)) {
      add(ConstraintFamily::Type, path, op + " range crosses a region boundary");
      return;
    }
    const RegionKind region = input_->region_at(n.start).provenance.kind;
    if (is_table_atomic(n.op)) {
      if (region != RegionKind::TableCell) {
        add(ConstraintFamily::Type, path, op + " must extract from a table cell");
        return;
      }
    } else if (region != RegionKind::Question && region != RegionKind::Paragraph) {
      add(ConstraintFamily::Type, path,
          op + " must extract from the question or a paragraph");
      return;
    }
    if (is_numeric_atomic(n.op) &&
        !parse_number(input_->surface(n.start, n.end))) {
      add(ConstraintFamily::Type, path,
          op + " range \"" + input_->surface(n.start, n.end) +
              "\" is not a number");
    }
  }

  const LegalityConfig& config_;
  const LinearizedInput* input_;
  ValidationReport report_;
};

}  // namespace

ValidationReport validate_structure(const Program& program,
                                    const LegalityConfig& config) {
  return Validator(config, nullptr).run(program);
}

ValidationReport validate(const Program& program, const LinearizedInput& input,
                          const LegalityConfig& config) {
  return Validator(config, &input).run(program);
}

// ---------------------------------------------------------------------------
// Range index.

RangeIndex::RangeIndex(const LinearizedInput& input,
                       const LegalityConfig& config)
    : size_(input.size()) {
  for (auto& e : ends_) e.assign(size_, {});
  auto has_space = [](const std::string& s) {
    return s.find(' ') != std::string::npos;
  };
  for (const Region& region : input.regions) {
    const RegionKind kind = region.provenance.kind;
    if (kind == RegionKind::Separator) continue;
    const bool table = kind == RegionKind::TableCell;
    const Op text_op = table ? Op::Cell : Op::Span;
    const Op num_op = table ? Op::CellValue : Op::Value;
    for (int s = region.first; s <= region.last; ++s) {
      if (config.enabled(text_op)) {
        int last = region.last;
        if (!table) last = std::min(last, s + config.max_span_length - 1);
        for (int e = s; e <= last; ++e) ends_[slot(text_op)][s].push_back(e);
      }
      if (config.enabled(num_op)) {
        for (int e = s; e <= region.last; ++e) {
          std::string text = input.surface(s, e);
          if (has_space(text)) break;
          if (parse_number(text)) ends_[slot(num_op)][s].push_back(e);
        }
      }
    }
  }
  for (int k = 0; k < 4; ++k) {
    for (const auto& v : ends_[k]) counts_[k] += v.size();
  }
  std::vector<int> merged;
  for (int s = 0; s < size_; ++s) {
    for (auto [a, b] : {std::pair{Op::Cell, Op::CellValue},
                        std::pair{Op::Span, Op::Value}}) {
      const auto& x = ends_[slot(a)][s];
      const auto& y = ends_[slot(b)][s];
      merged.clear();
      std::set_union(x.begin(), x.end(), y.begin(), y.end(),
                     std::back_inserter(merged));
      union_count_ += merged.size();
    }
  }
}

const std::vector<int>& RangeIndex::ends(Op kind, int start) const {
  static const std::vector<int> kEmpty;
  if (!is_atomic(kind) || start < 0 || start >= size_) return kEmpty;
  return ends_[slot(kind)][start];
}

bool RangeIndex::valid(Op kind, int start, int end) const {
  const auto& e = ends(kind, start);
  return std::binary_search(e.begin(), e.end(), end);
}

// ---------------------------------------------------------------------------
// Incremental session.
//
// Costs count decoding tokens. An atomic node costs 3 (OP POS POS), a
// constant 1, a KV pair 8 (OP key value CLOSE). A frame's remaining cost is
// the cheapest way to satisfy its minimum arity plus its CLOSE. Frames are
// independent, so the cheapest completion of a prefix is the sum over the
// open frames plus EOS, and a token is legal iff that sum still fits.

namespace {
constexpr int kInf = std::numeric_limits<int>::max() / 4;
constexpr int kAtomicCost = 3;
constexpr int kKvCost = 8;
}  // namespace

LegalitySession::LegalitySession(std::shared_ptr<const RangeIndex> index,
                                 const LegalityConfig& config)
    : index_(std::move(index)), config_(config) {
  config_.check();
  prefix_.push_back(DecodingToken::bos());
}

LegalitySession open_session(const LinearizedInput& input,
                             const LegalityConfig& config) {
  return LegalitySession(std::make_shared<RangeIndex>(input, config), config);
}

int LegalitySession::min_args(Op op) const {
  return op == Op::Count ? 1 : 2;
}

int LegalitySession::max_args(Op op) const {
  switch (op) {
    case Op::Avg: return config_.max_avg_args;
    case Op::ArgMax:
    case Op::ArgMin:
    case Op::Count:
    case Op::MultiSpans: return config_.max_variadic_args;
    default: return 2;
  }
}

bool LegalitySession::kv_feasible() const {
  auto ok = [&](Op key, Op value) {
    return config_.enabled(key) && config_.enabled(value) &&
           index_->count(key) > 0 && index_->count(value) > 0;
  };
  return config_.enabled(Op::Kv) &&
         (ok(Op::Cell, Op::CellValue) || ok(Op::Span, Op::Value));
}

int LegalitySession::fresh_cost(Op op) const {
  if (!config_.enabled(op)) return kInf;
  if (min_args(op) > max_args(op) && !is_atomic(op)) return kInf;
  switch (op) {
    case Op::Span:
    case Op::Cell:
    case Op::Value:
    case Op::CellValue:
      return index_->count(op) > 0 ? kAtomicCost : kInf;
    case Op::Kv:
      return kv_feasible() ? kKvCost : kInf;
    case Op::ArgMax:
    case Op::ArgMin:
      return kv_feasible() ? 2 + 2 * kKvCost : kInf;
    case Op::Count:
      return index_->union_count() >= 1 ? 2 + kAtomicCost : kInf;
    case Op::MultiSpans:
      return index_->union_count() >= 2 ? 2 + 2 * kAtomicCost : kInf;
    default:
      return 4;  // OP CONST CONST CLOSE
  }
}

int LegalitySession::required_cost(Op op, int nargs) const {
  const int missing = std::max(0, min_args(op) - nargs);
  switch (op) {
    case Op::Kv:
    case Op::Count:
    case Op::MultiSpans: return missing * kAtomicCost;
    case Op::ArgMax:
    case Op::ArgMin: return missing * kKvCost;
    default: return missing;  // constants
  }
}

int LegalitySession::rest_total() const {
  int rest = 1;  // EOS
  if (pending_.active) rest += pending_.start < 0 ? 2 : 1;
  for (const auto& f : stack_) rest += frame_rest(f);
  return rest;
}

bool LegalitySession::range_used(const Frame* f, int s, int e) const {
  if (!f || !collects(*f)) return false;
  return std::find(f->used.begin(), f->used.end(), std::pair{s, e}) !=
         f->used.end();
}

std::size_t LegalitySession::available(const Frame& f, Op kind) const {
  std::size_t taken = 0;
  for (auto [s, e] : f.used) taken += index_->valid(kind, s, e) ? 1 : 0;
  return index_->count(kind) - taken;
}

std::vector<DecodingToken> LegalitySession::legal_next() const {
  if (closed_) throw ClosedSession();
  std::vector<DecodingToken> out;
  const int consumed = static_cast<int>(prefix_.size()) - 1;
  const int budget = config_.max_program_tokens;
  const Frame* top = stack_.empty() ? nullptr : &stack_.back();

  if (pending_.active) {
    if (pending_.start < 0) {
      for (int s = 0; s < index_->size(); ++s) {
        for (int e : index_->ends(pending_.kind, s)) {
          if (!range_used(top, s, e)) {
            out.push_back(DecodingToken::position(s));
            break;
          }
        }
      }
    } else {
      for (int e : index_->ends(pending_.kind, pending_.start)) {
        if (!range_used(top, pending_.start, e)) {
          out.push_back(DecodingToken::position(e));
        }
      }
    }
    return out;
  }
  if (root_done_) return {DecodingToken::eos()};

  if (!top) {
    for (Op op : kAllOps) {
      if (op == Op::Kv) continue;
      const int c = fresh_cost(op);
      if (c < kInf && consumed + c + 1 <= budget) {
        out.push_back(DecodingToken::operation(op));
      }
    }
    return out;
  }

  const Frame& f = *top;
  const int others = rest_total() - frame_rest(f);
  if (f.nargs < max_args(f.op)) {
    const int after = required_cost(f.op, f.nargs + 1) + 1 + others;
    auto offer = [&](DecodingToken t, int cost) {
      if (cost < kInf && consumed + cost + after <= budget) out.push_back(t);
    };
    switch (f.op) {
      case Op::Kv:
        if (f.nargs == 0) {
          for (auto [key, value] : {std::pair{Op::Span, Op::Value},
                                    std::pair{Op::Cell, Op::CellValue}}) {
            if (fresh_cost(key) < kInf && fresh_cost(value) < kInf) {
              offer(DecodingToken::operation(key), kAtomicCost);
            }
          }
        } else {
          Op value = f.kv_key == Op::Cell ? Op::CellValue : Op::Value;
          offer(DecodingToken::operation(value), fresh_cost(value));
        }
        break;
      case Op::Count:
      case Op::MultiSpans: {
        const std::size_t union_left = index_->union_count() - f.used.size();
        const int still_needed = std::max(0, min_args(f.op) - (f.nargs + 1));
        if (union_left >= 1 + static_cast<std::size_t>(still_needed)) {
          for (Op k : {Op::Span, Op::Cell, Op::Value, Op::CellValue}) {
            if (config_.enabled(k) && available(f, k) > 0) {
              offer(DecodingToken::operation(k), kAtomicCost);
            }
          }
        }
        break;
      }
      case Op::ArgMax:
      case Op::ArgMin:
        offer(DecodingToken::operation(Op::Kv), fresh_cost(Op::Kv));
        break;
      default:
        for (Op op : {Op::Value, Op::CellValue, Op::Sum, Op::Diff, Op::Times,
                      Op::Div, Op::Avg, Op::ChangeR}) {
          offer(DecodingToken::operation(op), fresh_cost(op));
        }
        for (Constant c : kAllConstants) {
          offer(DecodingToken::constant_token(c), 1);
        }
        break;
    }
  }
  if (f.nargs >= min_args(f.op)) out.push_back(DecodingToken::close());
  std::sort(out.begin(), out.end());
  return out;
}

bool LegalitySession::is_legal(const DecodingToken& token) const {
  auto legal = legal_next();
  return std::find(legal.begin(), legal.end(), token) != legal.end();
}

void LegalitySession::attach(Node node) {
  if (stack_.empty()) {
    root_ = std::move(node);
    root_done_ = true;
  } else {
    stack_.back().node.args.push_back(std::move(node));
  }
}

void LegalitySession::advance(const DecodingToken& token) {
  if (!is_legal(token)) {
    throw IllegalToken(token.to_string() + " is not legal after " +
                       std::to_string(prefix_.size()) + " tokens");
  }
  prefix_.push_back(token);
  switch (token.kind) {
    case DecodingToken::Kind::Op:
      if (!stack_.empty()) {
        Frame& parent = stack_.back();
        if (parent.op == Op::Kv && parent.nargs == 0) parent.kv_key = token.op;
        ++parent.nargs;
      }
      if (is_atomic(token.op)) {
        pending_ = Pending{true, token.op, -1};
      } else {
        Frame f;
        f.op = token.op;
        f.node = Node::higher(token.op, {});
        stack_.push_back(std::move(f));
      }
      break;
    case DecodingToken::Kind::Pos:
      if (pending_.start < 0) {
        pending_.start = token.pos;
      } else {
        if (!stack_.empty() && collects(stack_.back())) {
          stack_.back().used.emplace_back(pending_.start, token.pos);
        }
        Node n = Node::atomic(pending_.kind, pending_.start, token.pos);
        pending_ = Pending{};
        attach(std::move(n));
      }
      break;
    case DecodingToken::Kind::Const:
      ++stack_.back().nargs;
      attach(Node::constant_node(token.constant));
      break;
    case DecodingToken::Kind::Close: {
      Node n = std::move(stack_.back().node);
      stack_.pop_back();
      attach(std::move(n));
      break;
    }
    case DecodingToken::Kind::Eos:
      closed_ = true;
      program_ = Program{std::move(*root_)};
      root_.reset();
      break;
    case DecodingToken::Kind::Bos:
      break;
  }
}

LegalitySession LegalitySession::advanced(const DecodingToken& token) const {
  LegalitySession copy = *this;
  copy.advance(token);
  return copy;
}

}  // namespace rpg
