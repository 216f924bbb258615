#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "oracles/naive_interpreter.hpp"
#include "oracles/random_contexts.hpp"
#include "rpg/error.hpp"
#include "rpg/executor.hpp"
#include "rpg/legality.hpp"

namespace rpg::oracle {

struct ExecutorCheckStats {
  int programs = 0;
  int contexts = 0;
  int failures = 0;  // execution errors seen on both sides
  int mismatches = 0;
  std::vector<std::string> examples;
};

inline bool same_number(double a, double b) {
  return std::fabs(a - b) <= 1e-9 * std::max(1.0, std::fabs(b));
}

inline bool agrees(const NaiveResult& naive, const Answer& answer) {
  using K = NaiveResult::Kind;
  switch (naive.kind) {
    case K::Number: {
      auto* n = std::get_if<Number>(&answer.payload);
      return n && answer.kind == AnswerKind::Number && same_number(n->value, naive.number);
    }
    case K::Count: {
      auto* c = std::get_if<CountVal>(&answer.payload);
      return c && c->value == naive.count;
    }
    case K::Text: {
      auto* t = std::get_if<Text>(&answer.payload);
      return t && t->items == naive.items;
    }
    case K::Failure:
      return false;
  }
  return false;
}

// Runs `target` valid random programs over fresh random contexts, a few
// programs per context, comparing the library executor to the naive one.
inline ExecutorCheckStats check_executor(std::uint64_t seed, int target,
                                         int programs_per_context = 10) {
  ExecutorCheckStats stats;
  Rng rng(seed);
  LegalityConfig config;
  while (stats.programs < target) {
    HybridContext ctx = random_small_context(rng);
    LinearizedInput input = linearize(ctx);
    RangeIndex index(input, config);
    RangeTable ranges(index);
    ProgramGenerator gen(ranges, rng);
    NaiveInterpreter naive(input);
    ++stats.contexts;
    int made = 0;
    for (int attempt = 0; attempt < 200 && made < programs_per_context &&
                          stats.programs < target;
         ++attempt) {
      auto program = gen.program();
      if (!program || !validate(*program, input, config).ok()) continue;
      ++made;
      ++stats.programs;
      NaiveResult expected = naive.run(*program);
      bool ok = false;
      try {
        Answer got = execute(*program, input);
        ok = agrees(expected, got);
      } catch (const ExecutionError&) {
        ok = expected.kind == NaiveResult::Kind::Failure;
        if (ok) ++stats.failures;
      }
      if (!ok) {
        ++stats.mismatches;
        if (stats.examples.size() < 5) stats.examples.push_back(print_program(*program));
      }
    }
  }
  return stats;
}

}  // namespace rpg::oracle
