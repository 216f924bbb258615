#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "oracles/legality_enumeration.hpp"
#include "oracles/random_contexts.hpp"
#include "rpg/error.hpp"
#include "rpg/legality.hpp"

using namespace rpg;

namespace {

bool offers(const LegalitySession& s, const DecodingToken& t) {
  auto next = s.legal_next();
  return std::find(next.begin(), next.end(), t) != next.end();
}

struct Figure1 {
  HybridContext ctx = test::load_one("figure1.json");
  LinearizedInput input = linearize(ctx);
};

}  // namespace

TEST_CASE("validate the figure1 program") {
  Figure1 f;
  CHECK(validate(parse_program("DIFF(CV(32,32), CV(33,33))"), f.input, {}).ok());
}

TEST_CASE("violation families") {
  Figure1 f;
  auto reversed = validate(parse_program("SPAN(9,5)"), f.input, {});
  CHECK(reversed.has(ConstraintFamily::Index));
  auto argmax = validate(parse_program("ARGMAX(CELL(16,16), CELL(17,17))"), f.input, {});
  CHECK(argmax.has(ConstraintFamily::Composition));
  CHECK(validate_structure(parse_program("SPAN(9,5)"), {}).has(ConstraintFamily::Index));
}

TEST_CASE("type rules by region") {
  Figure1 f;
  auto [s, e] = test::cell_tokens(f.input, 1, 0);  // "Net income"
  // CELL only inside one cell, SPAN never inside the table.
  CHECK(validate(Program{Node::atomic(Op::Cell, s, e)}, f.input, {}).ok());
  CHECK_FALSE(validate(Program{Node::atomic(Op::Span, s, e)}, f.input, {}).ok());
  CHECK_FALSE(validate(Program{Node::atomic(Op::Cell, s, e + 1)}, f.input, {}).ok());
  CHECK(validate(Program{Node::atomic(Op::Span, 1, 3)}, f.input, {}).ok());
  // CV over a non-numeric cell.
  CHECK(validate(Program{Node::atomic(Op::CellValue, s, e)}, f.input, {}).has(
      ConstraintFamily::Type));
  // Indices outside the sequence.
  CHECK(validate(Program{Node::atomic(Op::Span, 1, 5000)}, f.input, {}).has(
      ConstraintFamily::Index));
}

TEST_CASE("composition rules") {
  Figure1 f;
  CHECK_FALSE(validate(parse_program("100"), f.input, {}).ok());
  CHECK_FALSE(validate(parse_program("KV(CELL(16,16), CV(32,32))"), f.input, {}).ok());
  // KV pairs CELL with CV and SPAN with VALUE only.
  CHECK_FALSE(validate(parse_program("ARGMAX(KV(CELL(16,16), CV(32,32)), KV(SPAN(1,1), CV(33,33)))"),
                       f.input, {})
                  .ok());
  // COUNT needs distinct ranges.
  CHECK_FALSE(validate(parse_program("COUNT(CELL(16,16), CELL(16,16))"), f.input, {}).ok());
  CHECK(validate(parse_program("SUM(DIFF(CV(32,32), CV(33,33)), 1)"), f.input, {}).ok());
}

TEST_CASE("disabled ops and token budget") {
  Figure1 f;
  LegalityConfig cfg;
  cfg.disable(Op::Diff);
  CHECK_FALSE(validate(parse_program("DIFF(CV(32,32), CV(33,33))"), f.input, cfg).ok());
  LegalityConfig tight;
  tight.max_program_tokens = 8;
  CHECK_FALSE(validate(parse_program("DIFF(CV(32,32), CV(33,33))"), f.input, tight).ok());
  tight.max_program_tokens = 9;
  CHECK(validate(parse_program("DIFF(CV(32,32), CV(33,33))"), f.input, tight).ok());
}

TEST_CASE("validate is order-insensitive") {
  Figure1 f;
  auto a = validate(parse_program("DIFF(SPAN(9,5), CV(1,1))"), f.input, {});
  auto b = validate(parse_program("DIFF(CV(1,1), SPAN(9,5))"), f.input, {});
  REQUIRE(a.violations.size() == b.violations.size());
  for (std::size_t i = 0; i < a.violations.size(); ++i) {
    CHECK(a.violations[i].family == b.violations[i].family);
  }
}

TEST_CASE("first mask") {
  Figure1 f;
  auto s = open_session(f.input, {});
  CHECK(offers(s, DecodingToken::operation(Op::Diff)));
  CHECK(offers(s, DecodingToken::operation(Op::CellValue)));
  CHECK(offers(s, DecodingToken::operation(Op::Span)));
  CHECK_FALSE(offers(s, DecodingToken::operation(Op::Kv)));
  CHECK_FALSE(offers(s, DecodingToken::close()));
  CHECK_FALSE(offers(s, DecodingToken::constant_token(Constant::One)));
  CHECK_FALSE(offers(s, DecodingToken::eos()));
}

TEST_CASE("empty table removes table ops") {
  HybridContext ctx;
  ctx.question = "how many points were scored";
  ctx.paragraphs = {Paragraph{0, "They scored 7 and then 3 points.", {}}};
  auto s = open_session(linearize(ctx), {});
  CHECK_FALSE(offers(s, DecodingToken::operation(Op::Cell)));
  CHECK_FALSE(offers(s, DecodingToken::operation(Op::CellValue)));
  CHECK(offers(s, DecodingToken::operation(Op::Value)));
}

TEST_CASE("a two-token budget is a dead end") {
  Figure1 f;
  LegalityConfig cfg;
  cfg.max_program_tokens = 2;
  auto s = open_session(f.input, cfg);
  CHECK(s.legal_next().empty());
  CHECK(s.dead_end());
}

TEST_CASE("CV positions stay inside one cell") {
  HybridContext ctx;
  ctx.question = "q 5";
  ctx.table = Table::from_grid({{"x", "1,200 ( net ) 7"}, {"y", "0.53"}});
  auto input = linearize(ctx);
  for (auto [row, col] : {std::pair{0, 1}, std::pair{1, 1}}) {
    auto [s, e] = test::cell_tokens(input, row, col);
    auto session = open_session(input, {});
    session.advance(DecodingToken::operation(Op::CellValue));
    session.advance(DecodingToken::position(s));
    auto next = session.legal_next();
    std::vector<int> expected;
    for (int end = s; end < input.size(); ++end) {
      if (validate(Program{Node::atomic(Op::CellValue, s, end)}, input, {}).ok()) {
        expected.push_back(end);
      }
    }
    std::vector<int> got;
    for (const auto& t : next) {
      CHECK(t.kind == DecodingToken::Kind::Pos);
      CHECK(t.pos >= s);
      CHECK(t.pos <= e);
      got.push_back(t.pos);
    }
    CHECK(got == expected);
    CHECK_FALSE(got.empty());
  }
}

TEST_CASE("closing the root leaves only EOS") {
  Figure1 f;
  auto s = open_session(f.input, {});
  for (const char* t : {"OP(DIFF)", "OP(CV)", "POS(32)", "POS(32)", "OP(CV)", "POS(33)",
                        "POS(33)", "CLOSE"}) {
    s.advance(DecodingToken::parse(t));
  }
  auto next = s.legal_next();
  REQUIRE(next.size() == 1);
  CHECK(next[0] == DecodingToken::eos());
  s.advance(DecodingToken::eos());
  CHECK(s.closed());
  REQUIRE(s.program());
  CHECK(*s.program() == parse_program("DIFF(CV(32,32), CV(33,33))"));
  CHECK_THROWS_AS(s.advance(DecodingToken::eos()), ClosedSession);
}

TEST_CASE("illegal tokens throw") {
  Figure1 f;
  auto s = open_session(f.input, {});
  s.advance(DecodingToken::operation(Op::Span));
  s.advance(DecodingToken::position(9));
  CHECK_THROWS_AS(s.advance(DecodingToken::position(5)), IllegalToken);

  auto a = open_session(f.input, {});
  for (const char* t : {"OP(ARGMAX)", "OP(KV)", "OP(CELL)", "POS(16)", "POS(16)", "OP(CV)",
                        "POS(32)", "POS(32)", "CLOSE"}) {
    a.advance(DecodingToken::parse(t));
  }
  CHECK_THROWS_AS(a.advance(DecodingToken::close()), IllegalToken);
}

TEST_CASE("sessions copy independently") {
  Figure1 f;
  auto a = open_session(f.input, {});
  a.advance(DecodingToken::operation(Op::Diff));
  auto b = a.advanced(DecodingToken::operation(Op::CellValue));
  CHECK(a.prefix().size() + 1 == b.prefix().size());
  CHECK(offers(a, DecodingToken::operation(Op::Value)));
  CHECK_FALSE(offers(b, DecodingToken::operation(Op::Value)));
}

TEST_CASE("session agrees with validate on every random valid program") {
  oracle::Rng rng(77);
  LegalityConfig cfg;
  int fed = 0;
  for (int k = 0; k < 60; ++k) {
    auto input = linearize(oracle::random_small_context(rng));
    RangeIndex index(input, cfg);
    oracle::RangeTable ranges(index);
    oracle::ProgramGenerator gen(ranges, rng);
    for (int i = 0; i < 20; ++i) {
      auto p = gen.program();
      if (!p || !validate(*p, input, cfg).ok()) continue;
      auto s = open_session(input, cfg);
      auto tokens = to_decoding_tokens(*p);
      for (std::size_t t = 1; t < tokens.size(); ++t) {
        REQUIRE(s.is_legal(tokens[t]));
        s.advance(tokens[t]);
      }
      CHECK(s.closed());
      CHECK(*s.program() == *p);
      ++fed;
    }
  }
  CHECK(fed > 300);
}

TEST_CASE("exhaustive equivalence on the 6-token fixture") {
  auto input = linearize(test::load_one("mini6.json"));
  REQUIRE(input.size() == 6);
  auto stats = oracle::enumerate_legality(input, LegalityConfig{}, 10);
  CHECK(stats.discrepancies == 0);
  CHECK(stats.accepted > 0);
  CHECK(stats.dead_ends == 0);
  CHECK(stats.failed_completions == 0);
}

TEST_CASE("exhaustive equivalence under the table-free profile") {
  HybridContext ctx;
  ctx.question = "3 x";
  ctx.paragraphs = {Paragraph{0, "7", {}}};
  auto input = linearize(ctx);
  auto stats = oracle::enumerate_legality(input, LegalityConfig::table_free_profile(), 9);
  CHECK(stats.discrepancies == 0);
  CHECK(stats.dead_ends == 0);
  CHECK(stats.failed_completions == 0);
}
