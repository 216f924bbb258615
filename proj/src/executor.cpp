#include "rpg/executor.hpp"

#include <algorithm>
#include <cmath>

#include "rpg/error.hpp"
#include "rpg/number.hpp"

namespace rpg {
namespace {

double as_number(const Value& v, const char* op) {
  if (auto* n = std::get_if<Number>(&v)) return n->value;
  throw ExecutionError(std::string(op) + " expects numeric arguments");
}

const Text& as_text(const Value& v, const char* op) {
  if (auto* t = std::get_if<Text>(&v)) return *t;
  throw ExecutionError(std::string(op) + " expects a text argument");
}

std::vector<double> numbers(const Node& node, const LinearizedInput& input) {
  std::vector<double> out;
  out.reserve(node.args.size());
  for (const auto& a : node.args) {
    out.push_back(as_number(evaluate(a, input), op_name(node.op).data()));
  }
  return out;
}

bool is_numeric_payload(const Answer& a) {
  return std::holds_alternative<Number>(a.payload) ||
         std::holds_alternative<CountVal>(a.payload);
}

std::vector<std::string> normalized_items(const Answer& a) {
  std::vector<std::string> out;
  if (auto* t = std::get_if<Text>(&a.payload)) {
    for (const auto& item : t->items) out.push_back(normalize_answer_text(item));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string detokenize(const LinearizedInput& input, int start, int end) {
  if (start < 0 || end >= input.size() || start > end) {
    throw RangeError("token range (" + std::to_string(start) + "," +
                     std::to_string(end) + ") is not a valid range");
  }
  if (!input.same_region(start, end)) {
    throw RangeError("token range (" + std::to_string(start) + "," +
                     std::to_string(end) + ") crosses a region boundary");
  }
  return input.surface(start, end);
}

Value evaluate(const Node& node, const LinearizedInput& input) {
  if (node.is_const()) {
    return Number{static_cast<double>(constant_value(node.constant))};
  }
  if (node.is_atomic()) {
    std::string text = detokenize(input, node.start, node.end);
    if (!is_numeric_atomic(node.op)) return Text{{std::move(text)}};
    auto value = parse_number(text);
    if (!value) {
      throw NonNumericCell(std::string(op_name(node.op)) + " range \"" + text +
                           "\" does not parse as a number");
    }
    return Number{*value};
  }

  switch (node.op) {
    case Op::Kv: {
      const Value key = evaluate(node.args.at(0), input);
      double value = as_number(evaluate(node.args.at(1), input), "KV");
      return Pairs{{{as_text(key, "KV").items.front(), value}}};
    }
    case Op::Count:
      return CountVal{static_cast<std::int64_t>(node.args.size())};
    case Op::MultiSpans: {
      Text out;
      for (const auto& a : node.args) {
        out.items.push_back(detokenize(input, a.start, a.end));
      }
      return out;
    }
    case Op::ArgMax:
    case Op::ArgMin: {
      const bool max = node.op == Op::ArgMax;
      std::string best_key;
      double best = 0.0;
      bool first = true;
      for (const auto& a : node.args) {
        Value v = evaluate(a, input);
        auto* pairs = std::get_if<Pairs>(&v);
        if (!pairs) throw ExecutionError("ARGMAX/ARGMIN expects KV pairs");
        for (const auto& [key, value] : pairs->items) {
          if (first || (max ? value > best : value < best)) {
            best = value;
            best_key = key;
            first = false;
          }
        }
      }
      return Text{{best_key}};
    }
    case Op::Sum: {
      auto x = numbers(node, input);
      return Number{x.at(0) + x.at(1)};
    }
    case Op::Diff: {
      auto x = numbers(node, input);
      return Number{x.at(0) - x.at(1)};
    }
    case Op::Times: {
      auto x = numbers(node, input);
      return Number{x.at(0) * x.at(1)};
    }
    case Op::Div: {
      auto x = numbers(node, input);
      if (x.at(1) == 0.0) throw DivisionByZero("DIV by zero");
      return Number{x[0] / x[1]};
    }
    case Op::Avg: {
      auto x = numbers(node, input);
      if (x.empty()) throw ExecutionError("AVG of no arguments");
      double sum = 0.0;
      for (double v : x) sum += v;
      return Number{sum / static_cast<double>(x.size())};
    }
    case Op::ChangeR: {
      auto x = numbers(node, input);
      if (x.at(1) == 0.0) throw DivisionByZero("CHANGE_R with zero base");
      return Number{(x[0] - x[1]) / x[1]};
    }
    default:
      break;
  }
  throw ExecutionError("unexpected operation " + std::string(op_name(node.op)));
}

Answer execute(const Program& program, const LinearizedInput& input,
               std::optional<Scale> scale) {
  Value v = evaluate(program.root, input);
  Answer a;
  if (auto* t = std::get_if<Text>(&v)) {
    if (!program.root.is_const() && program.root.op == Op::MultiSpans) {
      a = make_text_answer(t->items);
    } else {
      a.kind = AnswerKind::Span;
      a.payload = std::move(*t);
    }
  } else if (std::holds_alternative<Number>(v)) {
    a.kind = AnswerKind::Number;
    a.payload = v;
  } else if (std::holds_alternative<CountVal>(v)) {
    a.kind = AnswerKind::Count;
    a.payload = v;
  } else {
    throw ExecutionError("a key-value pair is not an answer");
  }
  a.scale = scale;
  return a;
}

bool answers_match(const Answer& predicted, const Answer& gold, double tol) {
  if (predicted.scale && gold.scale && *predicted.scale != *gold.scale) {
    return false;
  }
  if (is_numeric_payload(predicted) || is_numeric_payload(gold)) {
    auto p = numeric_value(predicted);
    auto g = numeric_value(gold);
    if (!p || !g) return false;
    return std::fabs(round4(*p) - round4(*g)) <= tol;
  }
  return normalized_items(predicted) == normalized_items(gold);
}

}  // namespace rpg
