#include "rpg/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include <json.hpp>

#include "rpg/derivation.hpp"
#include "rpg/error.hpp"
#include "rpg/executor.hpp"
#include "rpg/number.hpp"

namespace rpg {
namespace {

using Clock = std::chrono::steady_clock;

bool near(double a, double b, double tol) {
  return std::fabs(round4(a) - round4(b)) <= tol;
}

bool is_const(const Node& n, Constant c) { return n.is_const() && n.constant == c; }

class Deadline {
 public:
  explicit Deadline(std::chrono::milliseconds budget)
      : end_(Clock::now() + budget) {}
  // Polls the clock every 256 calls.
  bool expired() {
    if (expired_) return true;
    if ((++ticks_ & 0xff) == 0 && Clock::now() >= end_) expired_ = true;
    return expired_;
  }
  bool hit() const { return expired_; }

 private:
  Clock::time_point end_;
  std::uint64_t ticks_ = 0;
  bool expired_ = false;
};

// Collects candidates once each, in first-seen order.
class CandidateSink {
 public:
  void add(Node root, double factor, TemplateCategory category) {
    Program p{std::move(root)};
    if (!seen_.insert(print_program(p)).second) return;
    out_.push_back(Candidate{std::move(p), factor, category});
  }
  std::vector<Candidate>& out() { return out_; }

 private:
  std::set<std::string> seen_;
  std::vector<Candidate> out_;
};

double apply(Op op, double a, double b) {
  switch (op) {
    case Op::Sum: return a + b;
    case Op::Diff: return a - b;
    case Op::Times: return a * b;
    case Op::Div: return a / b;
    case Op::ChangeR: return (a - b) / b;
    default: return NAN;
  }
}

constexpr Op kBinaryOps[] = {Op::Sum, Op::Diff, Op::Times, Op::Div};

// Identity and annihilator forms are never useful programs.
bool pruned(Op op, const Node& x, const Node& y) {
  switch (op) {
    case Op::Sum:
      return is_const(x, Constant::Zero) || is_const(y, Constant::Zero);
    case Op::Diff:
      return is_const(x, Constant::Zero) || is_const(y, Constant::Zero);
    case Op::Times:
      return is_const(x, Constant::Zero) || is_const(y, Constant::Zero) ||
             is_const(x, Constant::One) || is_const(y, Constant::One);
    case Op::Div:
      return is_const(x, Constant::Zero) || is_const(y, Constant::Zero) ||
             is_const(y, Constant::One);
    default:
      return false;
  }
}

// Bare four-digit years label periods; they are not quantities.
bool year_like(std::string_view surface, double v) {
  return v == std::floor(v) && v >= 1900 && v <= 2100 &&
         surface.find_first_of(",.$%") == std::string_view::npos;
}

// A percent-phrased gold matched through TIMES or DIV by the constant 100
// duplicates the unscaled program.
bool rescaled_by_hundred(const Node& n) {
  return (n.op == Op::Times || n.op == Op::Div) && n.is_higher() &&
         is_const(n.args.back(), Constant::Hundred);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

void SynthesisConfig::check() const {
  if (!(numeric_tolerance > 0.0)) throw ConfigError("numeric_tolerance must be positive");
  if (max_occurrences_per_span <= 0) {
    throw ConfigError("max_occurrences_per_span must be positive");
  }
  if (max_multispan_combinations <= 0) {
    throw ConfigError("max_multispan_combinations must be positive");
  }
  if (max_arith_numbers && *max_arith_numbers <= 0) {
    throw ConfigError("max_arith_numbers must be positive");
  }
  if (max_context_length == 0) throw ConfigError("max_context_length must be positive");
  if (per_instance_time_budget.count() <= 0) {
    throw ConfigError("per_instance_time_budget must be positive");
  }
}

std::string_view synthesis_mode_name(SynthesisMode mode) {
  return mode == SynthesisMode::WithDerivation ? "with-derivation"
                                               : "without-derivation";
}

std::optional<SynthesisMode> parse_synthesis_mode(std::string_view text) {
  if (text == "with-derivation") return SynthesisMode::WithDerivation;
  if (text == "without-derivation") return SynthesisMode::WithoutDerivation;
  return std::nullopt;
}

std::string_view template_category_name(TemplateCategory category) {
  switch (category) {
    case TemplateCategory::Extraction: return "extraction";
    case TemplateCategory::MultiSpans: return "multi-spans";
    case TemplateCategory::Counting: return "counting";
    case TemplateCategory::Comparison: return "comparison";
    case TemplateCategory::Arithmetic: return "arithmetic";
    case TemplateCategory::Derivation: return "derivation";
  }
  return "";
}

Synthesizer::Synthesizer(HybridContext ctx, SynthesisConfig config)
    : Synthesizer(ctx, config,
                  ctx.table_free ? LegalityConfig::table_free_profile()
                                 : LegalityConfig{}) {}

Synthesizer::Synthesizer(HybridContext ctx, SynthesisConfig config,
                         LegalityConfig legality)
    : ctx_(std::move(ctx)), config_(config), legality_(legality) {
  config_.check();
  input_ = linearize(ctx_, LinearizeConfig{config_.max_context_length});
  token_norm_.reserve(input_.tokens.size());
  for (const auto& t : input_.tokens) {
    token_norm_.push_back(normalize_answer_text(t.surface));
  }
}

std::vector<Synthesizer::Occurrence> Synthesizer::text_occurrences(
    const std::string& item) const {
  std::vector<Occurrence> out;
  const std::string target = normalize_answer_text(item);
  if (target.empty()) return out;
  for (const Region& region : input_.regions) {
    const RegionKind kind = region.provenance.kind;
    if (kind == RegionKind::Separator) continue;
    const bool table = kind == RegionKind::TableCell;
    const Op op = table ? Op::Cell : Op::Span;
    if (!legality_.enabled(op)) continue;
    for (int s = region.first; s <= region.last; ++s) {
      const std::string& head = token_norm_[s];
      if (head.empty() || target.compare(0, head.size(), head) != 0) continue;
      int last = region.last;
      if (!table) last = std::min(last, s + legality_.max_span_length - 1);
      for (int e = s; e <= last; ++e) {
        if (token_norm_[e].empty()) continue;
        std::string text = normalize_answer_text(input_.surface(s, e));
        if (text == target) {
          out.push_back({op, s, e});
          break;
        }
        if (text.size() > target.size()) break;
      }
    }
  }
  return out;
}

std::vector<Synthesizer::Occurrence> Synthesizer::number_occurrences(
    double value) const {
  std::vector<Occurrence> out;
  const double tol = config_.numeric_tolerance;
  for (const Region& region : input_.regions) {
    const RegionKind kind = region.provenance.kind;
    if (kind == RegionKind::Separator) continue;
    if (kind == RegionKind::TableCell) {
      if (!legality_.enabled(Op::CellValue)) continue;
      auto v = parse_number(input_.surface(region.first, region.last));
      if (v && near(*v, value, tol)) {
        out.push_back({Op::CellValue, region.first, region.last});
      }
      continue;
    }
    if (!legality_.enabled(Op::Value)) continue;
    for (int s = region.first; s <= region.last; ++s) {
      auto v = parse_number(input_.tokens[s].surface);
      if (v && near(*v, value, tol)) out.push_back({Op::Value, s, s});
    }
  }
  return out;
}

std::vector<std::vector<Synthesizer::Occurrence>> Synthesizer::combinations(
    const std::vector<std::string>& items) const {
  std::vector<std::vector<Occurrence>> per_item;
  for (const auto& item : items) {
    auto occ = text_occurrences(item);
    if (occ.empty()) return {};
    if (static_cast<int>(occ.size()) > config_.max_occurrences_per_span) {
      occ.resize(config_.max_occurrences_per_span);
    }
    per_item.push_back(std::move(occ));
  }
  struct Partial {
    long cost = 0;
    std::vector<int> pick;
  };
  const std::size_t cap = config_.max_multispan_combinations;
  const std::size_t width = cap * 4;
  std::vector<Partial> beam{Partial{}};
  for (std::size_t i = 0; i < per_item.size(); ++i) {
    std::vector<Partial> next;
    for (const auto& p : beam) {
      for (int k = 0; k < static_cast<int>(per_item[i].size()); ++k) {
        const Occurrence& o = per_item[i][k];
        bool clash = false;
        for (std::size_t j = 0; j < p.pick.size(); ++j) {
          const Occurrence& q = per_item[j][p.pick[j]];
          if (q.start == o.start && q.end == o.end) clash = true;
        }
        if (clash) continue;
        Partial n = p;
        if (i > 0) n.cost += std::abs(o.start - per_item[i - 1][p.pick.back()].start);
        n.pick.push_back(k);
        next.push_back(std::move(n));
      }
    }
    std::stable_sort(next.begin(), next.end(), [](const Partial& a, const Partial& b) {
      return a.cost != b.cost ? a.cost < b.cost : a.pick < b.pick;
    });
    if (next.size() > width) next.resize(width);
    beam = std::move(next);
  }
  if (beam.size() > cap) beam.resize(cap);
  std::vector<std::vector<Occurrence>> out;
  for (const auto& p : beam) {
    std::vector<Occurrence> combo;
    for (std::size_t j = 0; j < p.pick.size(); ++j) combo.push_back(per_item[j][p.pick[j]]);
    out.push_back(std::move(combo));
  }
  return out;
}

std::vector<Synthesizer::Operand> Synthesizer::arithmetic_operands() const {
  std::vector<Operand> out;
  std::map<double, int> seen;
  auto push = [&](Op op, int s, int e, double v) {
    if (year_like(input_.surface(s, e), v)) return;
    int& n = seen[round4(v)];
    if (n >= config_.max_occurrences_per_span) return;
    ++n;
    out.push_back({Node::atomic(op, s, e), v});
  };
  // Table numbers row-major, then paragraph numbers.
  for (const Region& region : input_.regions) {
    if (region.provenance.kind != RegionKind::TableCell) continue;
    if (!legality_.enabled(Op::CellValue)) break;
    if (auto v = parse_number(input_.surface(region.first, region.last))) {
      push(Op::CellValue, region.first, region.last, *v);
    }
  }
  for (const Region& region : input_.regions) {
    if (region.provenance.kind != RegionKind::Paragraph) continue;
    if (!legality_.enabled(Op::Value)) break;
    for (int s = region.first; s <= region.last; ++s) {
      if (auto v = parse_number(input_.tokens[s].surface)) push(Op::Value, s, s, *v);
    }
  }
  if (config_.max_arith_numbers &&
      static_cast<int>(out.size()) > *config_.max_arith_numbers) {
    out.resize(*config_.max_arith_numbers);
  }
  return out;
}

std::optional<Node> Synthesizer::ground(double value) const {
  for (const Region& region : input_.regions) {
    if (region.provenance.kind != RegionKind::TableCell) continue;
    auto v = parse_number(input_.surface(region.first, region.last));
    if (v && near(*v, value, config_.numeric_tolerance)) {
      return Node::atomic(Op::CellValue, region.first, region.last);
    }
  }
  for (const Region& region : input_.regions) {
    if (region.provenance.kind != RegionKind::Paragraph) continue;
    for (int s = region.first; s <= region.last; ++s) {
      auto v = parse_number(input_.tokens[s].surface);
      if (v && near(*v, value, config_.numeric_tolerance)) {
        return Node::atomic(Op::Value, s, s);
      }
    }
  }
  return std::nullopt;
}

std::vector<std::pair<double, double>> Synthesizer::gold_targets() const {
  std::vector<std::pair<double, double>> out;
  if (!ctx_.gold_answer) return out;
  auto g = numeric_value(*ctx_.gold_answer);
  if (!g) return out;
  out.emplace_back(*g, 1.0);
  const auto scale = ctx_.gold_answer->scale ? ctx_.gold_answer->scale : ctx_.gold_scale;
  if (scale != Scale::Percent) return out;
  for (auto [target, factor] : {std::pair{*g * 100.0, 0.01}, std::pair{*g / 100.0, 100.0}}) {
    bool dup = false;
    for (const auto& t : out) dup = dup || near(t.first, target, 0.0);
    if (!dup) out.emplace_back(target, factor);
  }
  return out;
}

std::vector<Program> Synthesizer::search_extraction() const {
  std::vector<Program> out;
  if (!ctx_.gold_answer) return out;
  const Answer& gold = *ctx_.gold_answer;
  std::vector<Occurrence> occ;
  if (gold.kind == AnswerKind::Number) {
    if (auto v = numeric_value(gold)) occ = number_occurrences(*v);
  } else if (gold.kind == AnswerKind::Span) {
    if (auto* t = std::get_if<Text>(&gold.payload); t && t->items.size() == 1) {
      occ = text_occurrences(t->items.front());
    }
  }
  for (const auto& o : occ) out.push_back(Program{Node::atomic(o.op, o.start, o.end)});
  return out;
}

std::vector<Program> Synthesizer::search_multispans() const {
  std::vector<Program> out;
  if (!ctx_.gold_answer || ctx_.gold_answer->kind != AnswerKind::Spans) return out;
  const auto* t = std::get_if<Text>(&ctx_.gold_answer->payload);
  if (!t || t->items.size() < 2) return out;
  for (const auto& combo : combinations(t->items)) {
    std::vector<Node> args;
    for (const auto& o : combo) args.push_back(Node::atomic(o.op, o.start, o.end));
    out.push_back(Program{Node::higher(Op::MultiSpans, std::move(args))});
  }
  return out;
}

std::vector<Program> Synthesizer::search_counting() const {
  std::vector<Program> out;
  if (!ctx_.gold_answer || ctx_.gold_answer->kind != AnswerKind::Count) return out;
  if (!ctx_.derivation) return out;
  auto g = numeric_value(*ctx_.gold_answer);
  auto items = split_derivation_items(*ctx_.derivation);
  if (!g || items.empty() || static_cast<double>(items.size()) != *g) return out;
  for (const auto& combo : combinations(items)) {
    std::vector<Node> args;
    for (const auto& o : combo) args.push_back(Node::atomic(o.op, o.start, o.end));
    out.push_back(Program{Node::higher(Op::Count, std::move(args))});
  }
  return out;
}

std::vector<Program> Synthesizer::search_comparison() const {
  std::vector<Program> out;
  if (!ctx_.gold_answer || ctx_.gold_answer->kind != AnswerKind::Span) return out;
  if (!legality_.enabled(Op::Cell) || !legality_.enabled(Op::CellValue)) return out;
  const Answer gold = make_text_answer(std::get<Text>(ctx_.gold_answer->payload).items);
  if (std::get<Text>(gold.payload).items.size() != 1) return out;

  std::map<std::pair<int, int>, const Region*> cells;
  for (const Region& r : input_.regions) {
    if (r.provenance.kind == RegionKind::TableCell) {
      cells[{r.provenance.row, r.provenance.col}] = &r;
    }
  }
  auto cell = [&](int r, int c) -> const Region* {
    auto it = cells.find({r, c});
    return it == cells.end() ? nullptr : it->second;
  };
  auto numeric = [&](const Region* r) {
    return r && parse_number(input_.surface(r->first, r->last)).has_value();
  };

  std::set<std::string> seen;
  auto emit = [&](std::vector<Node> pairs) {
    if (pairs.size() < 2) return;
    if (static_cast<int>(pairs.size()) > legality_.max_variadic_args) return;
    for (Op op : {Op::ArgMax, Op::ArgMin}) {
      Program p{Node::higher(op, pairs)};
      try {
        if (!answers_match(execute(p, input_), gold)) continue;
      } catch (const ExecutionError&) {
        continue;
      }
      if (seen.insert(print_program(p)).second) out.push_back(std::move(p));
    }
  };
  auto kv = [](const Region* key, const Region* value) {
    return Node::higher(Op::Kv, {Node::atomic(Op::Cell, key->first, key->last),
                                 Node::atomic(Op::CellValue, value->first, value->last)});
  };

  const int rows = ctx_.table.rows();
  const int cols = ctx_.table.cols();
  for (const auto& o : text_occurrences(std::get<Text>(gold.payload).items.front())) {
    if (o.op != Op::Cell) continue;
    const Region& region = input_.region_at(o.start);
    if (o.start != region.first || o.end != region.last) continue;
    const int r = region.provenance.row;
    const int c = region.provenance.col;
    // Keys along the answer's row, values from another row. A line of
    // numeric keys only counts when it is the header row.
    bool keys_ok = r == 0;
    for (int c2 = 0; c2 < cols && !keys_ok; ++c2) keys_ok = cell(r, c2) && !numeric(cell(r, c2));
    for (int r2 = 0; r2 < rows && keys_ok; ++r2) {
      if (r2 == r || !numeric(cell(r2, c))) continue;
      std::vector<Node> pairs;
      for (int c2 = 0; c2 < cols; ++c2) {
        const Region* key = cell(r, c2);
        const Region* value = cell(r2, c2);
        if (key && numeric(value) && (r == 0 || !numeric(key))) pairs.push_back(kv(key, value));
      }
      emit(std::move(pairs));
    }
    // Keys along the answer's column, values from another column.
    keys_ok = c == 0;
    for (int r2 = 0; r2 < rows && !keys_ok; ++r2) keys_ok = cell(r2, c) && !numeric(cell(r2, c));
    for (int c2 = 0; c2 < cols && keys_ok; ++c2) {
      if (c2 == c || !numeric(cell(r, c2))) continue;
      std::vector<Node> pairs;
      for (int r2 = 0; r2 < rows; ++r2) {
        const Region* key = cell(r2, c);
        const Region* value = cell(r2, c2);
        if (key && numeric(value) && (c == 0 || !numeric(key))) pairs.push_back(kv(key, value));
      }
      emit(std::move(pairs));
    }
  }
  return out;
}

SearchResult Synthesizer::search_arithmetic() const {
  SearchResult result;
  if (!ctx_.gold_answer || ctx_.gold_answer->kind != AnswerKind::Number) return result;
  const auto targets = gold_targets();
  if (targets.empty()) return result;
  const double tol = config_.numeric_tolerance;
  Deadline deadline(config_.per_instance_time_budget);
  CandidateSink sink;
  const auto cat = TemplateCategory::Arithmetic;

  std::vector<Operand> nums = arithmetic_operands();
  const int n = static_cast<int>(nums.size());
  std::vector<Operand> ops = nums;
  for (Constant c : kAllConstants) {
    ops.push_back({Node::constant_node(c), static_cast<double>(constant_value(c))});
  }
  const int m = static_cast<int>(ops.size());
  auto match = [&](double v, Node node) {
    if (!std::isfinite(v)) return;
    for (auto [t, f] : targets) {
      if (near(v, t, tol)) {
        if (f != 1.0 && rescaled_by_hundred(node)) continue;
        sink.add(std::move(node), f, cat);
        return;
      }
    }
  };
  auto enabled = [&](Op op) { return legality_.enabled(op); };
  auto binary_ok = [&](Op op, int i, int j) {
    if (i == j || !enabled(op)) return false;
    if ((op == Op::Sum || op == Op::Times) && i > j) return false;
    if (i >= n && j >= n) return false;
    if (pruned(op, ops[i].node, ops[j].node)) return false;
    if (op == Op::Div && ops[j].value == 0.0) return false;
    return true;
  };

  // F(x, y)
  for (Op op : kBinaryOps) {
    for (int i = 0; i < m && !deadline.expired(); ++i) {
      for (int j = 0; j < m; ++j) {
        if (!binary_ok(op, i, j)) continue;
        match(apply(op, ops[i].value, ops[j].value),
              Node::higher(op, {ops[i].node, ops[j].node}));
      }
    }
  }
  // AVG of two and three numbers.
  if (enabled(Op::Avg)) {
    for (int i = 0; i < n && !deadline.expired(); ++i) {
      for (int j = i + 1; j < n; ++j) {
        match((nums[i].value + nums[j].value) / 2.0,
              Node::higher(Op::Avg, {nums[i].node, nums[j].node}));
      }
    }
    if (legality_.max_avg_args >= 3) {
      for (int i = 0; i < n && !deadline.expired(); ++i) {
        for (int j = i + 1; j < n; ++j) {
          for (int k = j + 1; k < n; ++k) {
            match((nums[i].value + nums[j].value + nums[k].value) / 3.0,
                  Node::higher(Op::Avg, {nums[i].node, nums[j].node, nums[k].node}));
          }
        }
      }
    }
  }
  // CHANGE_R(x, y)
  if (enabled(Op::ChangeR)) {
    for (int i = 0; i < n && !deadline.expired(); ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j || nums[j].value == 0.0) continue;
        match(apply(Op::ChangeR, nums[i].value, nums[j].value),
              Node::higher(Op::ChangeR, {nums[i].node, nums[j].node}));
      }
    }
  }

  // DIFF(A, B) where A and B range over one inner family; pairs found by
  // binary search on the sorted inner values.
  struct Inner {
    double value;
    Node node;
  };
  auto diff_of = [&](std::vector<Inner> inner) {
    std::stable_sort(inner.begin(), inner.end(),
                     [](const Inner& a, const Inner& b) { return a.value < b.value; });
    for (std::size_t a = 0; a < inner.size() && !deadline.expired(); ++a) {
      for (auto [t, f] : targets) {
        (void)f;
        const double want = inner[a].value - t;
        const double slack = 2 * tol + 1e-9 * std::fabs(want);
        auto lo = std::lower_bound(inner.begin(), inner.end(), want - slack,
                                   [](const Inner& x, double v) { return x.value < v; });
        for (auto it = lo; it != inner.end() && it->value <= want + slack; ++it) {
          if (static_cast<std::size_t>(it - inner.begin()) == a) continue;
          match(inner[a].value - it->value,
                Node::higher(Op::Diff, {inner[a].node, it->node}));
        }
      }
    }
  };
  if (enabled(Op::Diff) && enabled(Op::Avg)) {
    std::vector<Inner> avgs;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        avgs.push_back({(nums[i].value + nums[j].value) / 2.0,
                        Node::higher(Op::Avg, {nums[i].node, nums[j].node})});
      }
    }
    diff_of(std::move(avgs));
  }
  if (enabled(Op::Diff) && enabled(Op::ChangeR)) {
    std::vector<Inner> rates;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j || nums[j].value == 0.0) continue;
        rates.push_back({apply(Op::ChangeR, nums[i].value, nums[j].value),
                         Node::higher(Op::ChangeR, {nums[i].node, nums[j].node})});
      }
    }
    diff_of(std::move(rates));
  }

  // F1(F2(x, y), z): solve for z and look it up among the operands.
  if (config_.enable_nested_templates) {
    std::vector<std::pair<double, int>> sorted;
    for (int k = 0; k < m; ++k) sorted.emplace_back(ops[k].value, k);
    std::sort(sorted.begin(), sorted.end());
    for (Op f2 : kBinaryOps) {
      for (int i = 0; i < m && !deadline.expired(); ++i) {
        for (int j = 0; j < m; ++j) {
          if (!binary_ok(f2, i, j)) continue;
          const double v = apply(f2, ops[i].value, ops[j].value);
          if (!std::isfinite(v)) continue;
          const Node inner = Node::higher(f2, {ops[i].node, ops[j].node});
          for (Op f1 : kBinaryOps) {
            if (!enabled(f1)) continue;
            for (auto [t, f] : targets) {
              (void)f;
              double z;
              double slack;
              switch (f1) {
                case Op::Sum: z = t - v; slack = 2 * tol; break;
                case Op::Diff: z = v - t; slack = 2 * tol; break;
                case Op::Times:
                  if (v == 0.0) continue;
                  z = t / v;
                  slack = 2 * tol / std::fabs(v);
                  break;
                default:
                  if (t == 0.0) continue;
                  z = v / t;
                  slack = 2 * tol * z * z / std::max(std::fabs(v), 1e-12);
                  break;
              }
              slack += 1e-9 * std::fabs(z);
              auto lo = std::lower_bound(sorted.begin(), sorted.end(),
                                         std::pair{z - slack, -1});
              for (auto it = lo; it != sorted.end() && it->first <= z + slack; ++it) {
                const int k = it->second;
                if (k == i || k == j) continue;
                if (pruned(f1, inner, ops[k].node)) continue;
                if (f1 == Op::Div && ops[k].value == 0.0) continue;
                // SUM(SUM(x, y), z) and TIMES(TIMES(..)) only in index order.
                if (f1 == f2 && (f1 == Op::Sum || f1 == Op::Times) && k < j) continue;
                match(apply(f1, v, ops[k].value), Node::higher(f1, {inner, ops[k].node}));
              }
            }
          }
        }
      }
    }
  }
  result.candidates = std::move(sink.out());
  result.truncated = deadline.hit();
  return result;
}

namespace {

// Leaves of a left-nested chain of additions.
void sum_leaves(const Expr& e, std::vector<const Expr*>& out) {
  if (e.kind == Expr::Kind::Add) {
    sum_leaves(e.args[0], out);
    sum_leaves(e.args[1], out);
  } else {
    out.push_back(&e);
  }
}

}  // namespace

std::optional<Program> Synthesizer::program_from_derivation() const {
  if (!ctx_.derivation) return std::nullopt;
  auto expr = parse_derivation(*ctx_.derivation);
  if (!expr) return std::nullopt;

  std::function<std::optional<Node>(const Expr&)> build =
      [&](const Expr& e) -> std::optional<Node> {
    if (e.is_literal()) {
      if (e.value == std::floor(e.value) && std::fabs(e.value) <= 100) {
        if (auto c = constant_from_value(static_cast<long long>(e.value))) {
          return Node::constant_node(*c);
        }
      }
      return ground(e.value);
    }
    const Expr& a = e.args[0];
    const Expr& b = e.args[1];
    if (e.kind == Expr::Kind::Div && a.kind == Expr::Kind::Sub && b.is_literal() &&
        a.args[1].is_literal() && a.args[1].value == b.value) {
      auto x = build(a.args[0]);
      auto y = ground(b.value);
      if (!x || !y) return std::nullopt;
      return Node::higher(Op::ChangeR, {std::move(*x), std::move(*y)});
    }
    if (e.kind == Expr::Kind::Div && a.kind == Expr::Kind::Add && b.is_literal()) {
      std::vector<const Expr*> leaves;
      sum_leaves(a, leaves);
      if (b.value == static_cast<double>(leaves.size()) &&
          static_cast<int>(leaves.size()) <= legality_.max_avg_args) {
        std::vector<Node> args;
        for (const Expr* leaf : leaves) {
          auto x = build(*leaf);
          if (!x) return std::nullopt;
          args.push_back(std::move(*x));
        }
        return Node::higher(Op::Avg, std::move(args));
      }
    }
    auto x = build(a);
    auto y = build(b);
    if (!x || !y) return std::nullopt;
    Op op = Op::Sum;
    switch (e.kind) {
      case Expr::Kind::Add: op = Op::Sum; break;
      case Expr::Kind::Sub: op = Op::Diff; break;
      case Expr::Kind::Mul: op = Op::Times; break;
      case Expr::Kind::Div: op = Op::Div; break;
      case Expr::Kind::Literal: break;
    }
    return Node::higher(op, {std::move(*x), std::move(*y)});
  };

  auto root = build(*expr);
  if (!root || root->is_const()) return std::nullopt;
  Program p{std::move(*root)};
  if (!validate(p, input_, legality_).ok()) return std::nullopt;
  return p;
}

bool Synthesizer::sound(const Candidate& c) const {
  if (!ctx_.gold_answer) return false;
  if (!validate(c.program, input_, legality_).ok()) return false;
  Answer gold = *ctx_.gold_answer;
  if (c.answer_factor != 1.0) {
    auto g = numeric_value(gold);
    if (!g) return false;
    gold = make_number_answer(*g / c.answer_factor, gold.scale);
  }
  try {
    return answers_match(execute(c.program, input_, ctx_.gold_answer->scale), gold,
                         config_.numeric_tolerance);
  } catch (const ExecutionError&) {
    return false;
  }
}

SearchResult Synthesizer::candidates(SynthesisMode mode) const {
  SearchResult out;
  if (!ctx_.gold_answer) return out;
  auto add_all = [&](std::vector<Program> ps, TemplateCategory cat) {
    for (auto& p : ps) out.candidates.push_back(Candidate{std::move(p), 1.0, cat});
  };
  switch (ctx_.gold_answer->kind) {
    case AnswerKind::Span:
      add_all(search_extraction(), TemplateCategory::Extraction);
      add_all(search_comparison(), TemplateCategory::Comparison);
      break;
    case AnswerKind::Spans:
      add_all(search_multispans(), TemplateCategory::MultiSpans);
      break;
    case AnswerKind::Count:
      add_all(search_counting(), TemplateCategory::Counting);
      break;
    case AnswerKind::Number: {
      if (mode == SynthesisMode::WithDerivation && ctx_.derivation &&
          parse_derivation(*ctx_.derivation)) {
        if (auto p = program_from_derivation()) {
          for (double f : {1.0, 0.01, 100.0}) {
            Candidate c{*p, f, TemplateCategory::Derivation};
            if (sound(c)) {
              out.candidates.push_back(std::move(c));
              break;
            }
          }
        }
        return out;
      }
      add_all(search_extraction(), TemplateCategory::Extraction);
      auto arith = search_arithmetic();
      out.truncated = arith.truncated;
      for (auto& c : arith.candidates) out.candidates.push_back(std::move(c));
      break;
    }
  }
  return out;
}

PseudoProgramSet Synthesizer::synthesize(SynthesisMode mode) const {
  PseudoProgramSet set;
  set.instance_id = ctx_.id;
  SearchResult found = candidates(mode);
  set.truncated = found.truncated;
  std::set<std::string> seen;
  for (auto& c : found.candidates) {
    if (!sound(c)) continue;
    if (!seen.insert(print_program(c.program)).second) continue;
    PseudoProgram p;
    p.signature = operation_signature(c.program);
    p.program = std::move(c.program);
    p.answer_factor = c.answer_factor;
    p.category = c.category;
    set.programs.push_back(std::move(p));
    // With an annotated derivation the first sound program stands in for it.
    if (mode == SynthesisMode::WithDerivation) break;
  }
  assign_weights(set);
  return set;
}

void assign_weights(PseudoProgramSet& set) {
  std::map<std::string, int> counts;
  for (const auto& p : set.programs) ++counts[p.signature];
  for (auto& p : set.programs) p.weight = 1.0 / counts[p.signature];
}

PseudoProgramSet synthesize(const HybridContext& ctx, SynthesisMode mode,
                            const SynthesisConfig& config, const LegalityConfig& legality) {
  return Synthesizer(ctx, config,
                     ctx.table_free ? LegalityConfig::table_free_profile(legality) : legality)
      .synthesize(mode);
}

std::optional<std::string> counting_question(std::string_view question) {
  std::size_t i = 0;
  while (i < question.size()) {
    while (i < question.size() && !std::isalpha(static_cast<unsigned char>(question[i]))) ++i;
    std::size_t j = i;
    while (j < question.size() && std::isalpha(static_cast<unsigned char>(question[j]))) ++j;
    if (j == i) break;
    std::string word = lower(question.substr(i, j - i));
    if (word == "what" || word == "which" || word == "who") {
      const bool upper = std::isupper(static_cast<unsigned char>(question[i]));
      std::string out(question.substr(0, i));
      out += upper ? "How many" : "how many";
      out += question.substr(j);
      return out;
    }
    i = j;
  }
  return std::nullopt;
}

std::optional<AugmentedInstance> augment_counting(const HybridContext& ctx,
                                                  const SynthesisConfig& config) {
  if (!ctx.gold_answer || ctx.gold_answer->kind != AnswerKind::Spans) return std::nullopt;
  const auto* items = std::get_if<Text>(&ctx.gold_answer->payload);
  if (!items || items->items.size() < 2) return std::nullopt;
  auto question = counting_question(ctx.question);
  if (!question) return std::nullopt;
  AugmentedInstance aug;
  aug.context = ctx;
  aug.context.id = ctx.id + "#count";
  aug.context.question = *question;
  aug.context.gold_answer = make_count_answer(static_cast<std::int64_t>(items->items.size()));
  aug.context.gold_scale.reset();
  std::string derivation;
  for (const auto& item : items->items) {
    if (!derivation.empty()) derivation += "##";
    derivation += item;
  }
  aug.context.derivation = derivation;
  aug.programs = synthesize(aug.context, SynthesisMode::WithoutDerivation, config);
  if (!aug.programs.covered()) return std::nullopt;
  return aug;
}

namespace {

PseudoProgramSet synthesize_or_skip(const HybridContext& ctx, SynthesisMode mode,
                                    const SynthesisConfig& config,
                                    const LegalityConfig& legality) {
  try {
    return synthesize(ctx, mode, config, legality);
  } catch (const OversizeContext&) {
    PseudoProgramSet set;
    set.instance_id = ctx.id;
    set.oversize = true;
    return set;
  }
}

}  // namespace

std::vector<PseudoProgramSet> synthesize_batch(const std::vector<HybridContext>& contexts,
                                               SynthesisMode mode,
                                               const SynthesisConfig& config,
                                               const LegalityConfig& legality) {
  std::vector<PseudoProgramSet> out(contexts.size());
  const long n = static_cast<long>(contexts.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) out[i] = synthesize_or_skip(contexts[i], mode, config, legality);
  return out;
}

std::vector<PseudoProgramSet> synthesize_batch_serial(
    const std::vector<HybridContext>& contexts, SynthesisMode mode,
    const SynthesisConfig& config, const LegalityConfig& legality) {
  std::vector<PseudoProgramSet> out;
  out.reserve(contexts.size());
  for (const auto& ctx : contexts) out.push_back(synthesize_or_skip(ctx, mode, config, legality));
  return out;
}

std::vector<SupervisionRecord> supervision_records(const std::vector<PseudoProgramSet>& sets) {
  std::vector<SupervisionRecord> out;
  for (const auto& set : sets) {
    for (const auto& p : set.programs) {
      SupervisionRecord r;
      r.instance_id = set.instance_id;
      r.program = print_program(p.program);
      for (const auto& t : to_decoding_tokens(p.program)) r.token_ids.push_back(t.id());
      r.weight = p.weight;
      r.signature = p.signature;
      r.answer_factor = p.answer_factor;
      r.category = std::string(template_category_name(p.category));
      out.push_back(std::move(r));
    }
  }
  return out;
}

void export_supervision(std::ostream& out, const std::vector<PseudoProgramSet>& sets) {
  auto records = supervision_records(sets);
  nlohmann::ordered_json header = {{"schema_version", kSupervisionSchemaVersion},
                                   {"kind", "supervision"},
                                   {"records", records.size()}};
  out << header.dump() << '\n';
  for (const auto& r : records) {
    nlohmann::ordered_json j = {{"schema_version", kSupervisionSchemaVersion},
                                {"instance_id", r.instance_id},
                                {"program", r.program},
                                {"token_ids", r.token_ids},
                                {"weight", r.weight},
                                {"signature", r.signature},
                                {"answer_factor", r.answer_factor},
                                {"category", r.category}};
    out << j.dump() << '\n';
  }
}

std::vector<SupervisionRecord> read_supervision(std::istream& in) {
  std::vector<SupervisionRecord> out;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("$[0]", "missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("$[0]", e.what());
  }
  if (!header.is_object() || header.value("kind", "") != "supervision" ||
      header.value("schema_version", 0) != kSupervisionSchemaVersion) {
    throw SchemaError("$[0]", "not a supervision header");
  }
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string path = "$[" + std::to_string(lineno) + "]";
    try {
      auto j = nlohmann::json::parse(line);
      SupervisionRecord r;
      r.instance_id = j.at("instance_id").get<std::string>();
      r.program = j.at("program").get<std::string>();
      r.token_ids = j.at("token_ids").get<std::vector<int>>();
      r.weight = j.at("weight").get<double>();
      r.signature = j.at("signature").get<std::string>();
      r.answer_factor = j.value("answer_factor", 1.0);
      r.category = j.value("category", "");
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path, e.what());
    }
  }
  if (header.contains("records") && header["records"].get<std::size_t>() != out.size()) {
    throw SchemaError("$[0].records", "record count does not match the file");
  }
  return out;
}

std::vector<double> recompute_weights(const std::vector<SupervisionRecord>& records) {
  std::map<std::pair<std::string, std::string>, int> counts;
  for (const auto& r : records) ++counts[{r.instance_id, r.signature}];
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(1.0 / counts[{r.instance_id, r.signature}]);
  return out;
}

}  // namespace rpg
