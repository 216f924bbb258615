#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "fixtures.hpp"
#include "oracles/random_contexts.hpp"
#include "rpg/derivation.hpp"
#include "rpg/error.hpp"
#include "rpg/executor.hpp"
#include "rpg/synthesis.hpp"

using namespace rpg;

namespace {

bool contains(const std::vector<Program>& ps, const std::string& text) {
  Program want = parse_program(text);
  return std::find(ps.begin(), ps.end(), want) != ps.end();
}

std::vector<Program> programs_of(const SearchResult& r) {
  std::vector<Program> out;
  for (const auto& c : r.candidates) out.push_back(c.program);
  return out;
}

std::string cv(const LinearizedInput& input, int row, int col) {
  auto [s, e] = test::cell_tokens(input, row, col);
  return "CV(" + std::to_string(s) + "," + std::to_string(e) + ")";
}

std::string cell(const LinearizedInput& input, int row, int col) {
  auto [s, e] = test::cell_tokens(input, row, col);
  return "CELL(" + std::to_string(s) + "," + std::to_string(e) + ")";
}

HybridContext sales_with_answer(Answer gold) {
  HybridContext ctx = test::load_one("sales_argmax.json");
  ctx.gold_answer = std::move(gold);
  return ctx;
}

}  // namespace

TEST_CASE("derivation parsing") {
  auto e = parse_derivation("(70.07+80.82)/2");
  REQUIRE(e);
  CHECK(e->kind == Expr::Kind::Div);
  CHECK(e->args[0].kind == Expr::Kind::Add);
  CHECK(e->args[1].value == 2.0);

  auto g = parse_derivation("1,642-1,448");
  REQUIRE(g);
  CHECK(g->args[0].value == 1642.0);
  CHECK(g->args[1].text == "1448");

  auto u = parse_derivation("-(3 x 4)");
  REQUIRE(u);
  CHECK(u->kind == Expr::Kind::Sub);

  CHECK(parse_derivation("2 ÷ 4 × 8")->kind == Expr::Kind::Mul);
  CHECK_FALSE(parse_derivation("").has_value());
  CHECK_FALSE(parse_derivation("(1+2").has_value());
  CHECK_FALSE(parse_derivation("net sales").has_value());
  CHECK(split_derivation_items(" A ## B##C ") == std::vector<std::string>{"A", "B", "C"});
}

TEST_CASE("program_from_derivation grounds figure1") {
  Synthesizer s(test::load_one("figure1.json"));
  auto p = s.program_from_derivation();
  REQUIRE(p);
  CHECK(print_program(*p) == "DIFF(CV(32,32), CV(33,33))");
}

TEST_CASE("program_from_derivation rewrites a sum over its count to AVG") {
  HybridContext ctx;
  ctx.id = "avg";
  ctx.question = "What was the average?";
  ctx.table = Table::from_grid({{"", "2019", "2018"}, {"Rate", "70.07", "80.82"}});
  ctx.derivation = "(70.07+80.82)/2";
  ctx.gold_answer = make_number_answer(75.445);
  Synthesizer s(ctx);
  auto p = s.program_from_derivation();
  REQUIRE(p);
  CHECK(operation_signature(*p) == "AVG/CV/CV");
  CHECK(std::get<Number>(execute(*p, s.input()).payload).value == doctest::Approx(75.445));
}

TEST_CASE("program_from_derivation rewrites relative change to CHANGE_R") {
  HybridContext ctx = test::load_one("sales_argmax.json");
  ctx.derivation = "(1,496.5-1,202.9)/1,202.9";
  Synthesizer s(ctx);
  auto p = s.program_from_derivation();
  REQUIRE(p);
  CHECK(print_program(*p) ==
        "CHANGE_R(" + cv(s.input(), 3, 1) + ", " + cv(s.input(), 3, 2) + ")");
}

TEST_CASE("a single literal derivation grounds to its cell") {
  HybridContext ctx;
  ctx.question = "How many?";
  ctx.table = Table::from_grid({{"a", "5"}});
  ctx.derivation = "5";
  ctx.gold_answer = make_number_answer(5);
  Synthesizer s(ctx);
  auto p = s.program_from_derivation();
  REQUIRE(p);
  CHECK(print_program(*p) == cv(s.input(), 0, 1));
}

TEST_CASE("extraction") {
  Synthesizer two(sales_with_answer(make_text_answer({"2019"})));
  auto found = two.search_extraction();
  CHECK(contains(found, cell(two.input(), 0, 1)));

  Synthesizer num(sales_with_answer(make_number_answer(1496.5)));
  auto numeric = num.search_extraction();
  CHECK(numeric.size() == 1);
  CHECK(contains(numeric, cv(num.input(), 3, 1)));

  Synthesizer none(sales_with_answer(make_text_answer({"Antarctica"})));
  CHECK(none.search_extraction().empty());
}

TEST_CASE("extraction counts every occurrence") {
  HybridContext ctx;
  ctx.question = "Which year?";
  ctx.table = Table::from_grid({{"2019", "x"}, {"y", "2019"}});
  ctx.gold_answer = make_text_answer({"2019"});
  Synthesizer s(ctx);
  auto found = s.search_extraction();
  CHECK(found.size() == 2);
  CHECK(contains(found, cell(s.input(), 0, 0)));
  CHECK(contains(found, cell(s.input(), 1, 1)));
}

TEST_CASE("multi spans combinations and cap") {
  HybridContext ctx;
  ctx.question = "Which?";
  ctx.paragraphs = {Paragraph{0, "Oslo and Bergen", {}}};
  ctx.gold_answer = make_text_answer({"Oslo", "Bergen"});
  CHECK(Synthesizer(ctx).search_multispans().size() == 1);

  ctx.paragraphs = {Paragraph{0, "Oslo and Bergen then Oslo", {}}};
  CHECK(Synthesizer(ctx).search_multispans().size() == 2);

  ctx.paragraphs = {Paragraph{0, "Oslo Bergen Molde Oslo Bergen Molde Oslo Bergen Molde Oslo Bergen Molde", {}}};
  ctx.gold_answer = make_text_answer({"Oslo", "Bergen", "Molde"});
  auto capped = Synthesizer(ctx).search_multispans();
  CHECK(capped.size() == 64);
  for (const auto& p : capped) CHECK(p.root.args.size() == 3);
}

TEST_CASE("counting") {
  HybridContext ctx;
  ctx.id = "m1";
  ctx.question = "Which segments grew?";
  ctx.paragraphs = {Paragraph{0, "Retail, Cloud and Devices grew this year.", {}}};
  ctx.gold_answer = make_text_answer({"Retail", "Cloud", "Devices"});
  auto aug = augment_counting(ctx);
  REQUIRE(aug);
  CHECK(aug->context.question == "How many segments grew?");
  CHECK(aug->context.id == "m1#count");
  REQUIRE(aug->programs.covered());
  const auto& p = aug->programs.programs.front().program;
  CHECK(p.root.op == Op::Count);
  CHECK(std::get<CountVal>(execute(p, linearize(aug->context)).payload).value == 3);
  CHECK(ctx.question == "Which segments grew?");

  HybridContext one = ctx;
  one.gold_answer = make_text_answer({"Retail"});
  CHECK_FALSE(augment_counting(one).has_value());

  HybridContext count = ctx;
  count.question = "How many segments grew?";
  count.gold_answer = make_count_answer(2);
  CHECK(Synthesizer(count).search_counting().empty());
  CHECK(counting_question("Who won?") == "How many won?");
  CHECK(counting_question("In which years?") == "In how many years?");
  CHECK_FALSE(counting_question("How much?").has_value());
}

TEST_CASE("counting with item derivation") {
  HybridContext ctx;
  ctx.question = "How many segments grew?";
  ctx.paragraphs = {Paragraph{0, "Retail, Cloud and Devices grew this year.", {}}};
  ctx.gold_answer = make_count_answer(2);
  ctx.derivation = "Retail##Devices";
  auto found = Synthesizer(ctx).search_counting();
  REQUIRE(found.size() == 1);
  CHECK(found[0].root.args.size() == 2);
}

TEST_CASE("comparison") {
  Synthesizer top(sales_with_answer(make_text_answer({"2019"})));
  std::string kv;
  for (int col = 1; col <= 3; ++col) {
    kv += (col > 1 ? ", " : "") + std::string("KV(") + cell(top.input(), 0, col) + ", " +
          cv(top.input(), 3, col) + ")";
  }
  CHECK(contains(top.search_comparison(), "ARGMAX(" + kv + ")"));

  Synthesizer bottom(sales_with_answer(make_text_answer({"2017"})));
  CHECK(contains(bottom.search_comparison(), "ARGMIN(" + kv + ")"));

  HybridContext flat;
  flat.question = "Which year was highest?";
  flat.table = Table::from_grid({{"", "2019", "2018"}, {"Sales", "5", "5"}});
  flat.gold_answer = make_text_answer({"2018"});
  CHECK(Synthesizer(flat).search_comparison().empty());
}

TEST_CASE("arithmetic") {
  Synthesizer fig(test::load_one("figure1.json"));
  CHECK(contains(programs_of(fig.search_arithmetic()), "DIFF(CV(32,32), CV(33,33))"));

  HybridContext consts;
  consts.question = "What is it?";
  consts.paragraphs = {Paragraph{0, "nothing numeric here", {}}};
  consts.gold_answer = make_number_answer(0.5);
  CHECK(Synthesizer(consts).search_arithmetic().candidates.empty());

  Synthesizer sales(sales_with_answer(make_number_answer(0.244077)));
  CHECK(contains(programs_of(sales.search_arithmetic()),
                 "CHANGE_R(" + cv(sales.input(), 3, 1) + ", " + cv(sales.input(), 3, 2) + ")"));
}

TEST_CASE("percent absorption") {
  HybridContext ctx = sales_with_answer(make_number_answer(24.41, Scale::Percent));
  ctx.gold_scale = Scale::Percent;
  Synthesizer s(ctx);
  auto set = s.synthesize(SynthesisMode::WithoutDerivation);
  std::string want = "CHANGE_R(" + cv(s.input(), 3, 1) + ", " + cv(s.input(), 3, 2) + ")";
  auto it = std::find_if(set.programs.begin(), set.programs.end(),
                         [&](const PseudoProgram& p) { return print_program(p.program) == want; });
  REQUIRE(it != set.programs.end());
  CHECK(it->answer_factor == 100.0);
}

TEST_CASE("weights") {
  PseudoProgramSet set;
  for (const char* p : {"SPAN(1,1)", "SPAN(2,2)", "CELL(3,3)"}) {
    PseudoProgram pp;
    pp.program = parse_program(p);
    pp.signature = operation_signature(pp.program);
    set.programs.push_back(pp);
  }
  assign_weights(set);
  CHECK(set.programs[0].weight == 0.5);
  CHECK(set.programs[1].weight == 0.5);
  CHECK(set.programs[2].weight == 1.0);
  set.programs.resize(1);
  assign_weights(set);
  CHECK(set.programs[0].weight == 1.0);
}

TEST_CASE("synthesized programs are sound, normalized and deterministic") {
  auto contexts = load_tatqa(test::fixture("synthetic_tatqa.json"));
  contexts.resize(60);
  for (auto mode : {SynthesisMode::WithoutDerivation, SynthesisMode::WithDerivation}) {
    auto batch = synthesize_batch(contexts, mode);
    auto serial = synthesize_batch_serial(contexts, mode);
    REQUIRE(batch.size() == contexts.size());
    for (std::size_t i = 0; i < contexts.size(); ++i) {
      CHECK(batch[i].instance_id == contexts[i].id);
      CHECK(batch[i].programs == serial[i].programs);
      Synthesizer s(contexts[i]);
      std::map<std::string, double> sums;
      for (const auto& p : batch[i].programs) {
        CHECK(s.sound(Candidate{p.program, p.answer_factor, p.category}));
        sums[p.signature] += p.weight;
      }
      for (const auto& [sig, sum] : sums) CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("with-derivation mode on figure1 gives exactly the gold program") {
  auto ctx = test::load_one("figure1.json");
  auto with = synthesize(ctx, SynthesisMode::WithDerivation);
  REQUIRE(with.programs.size() == 1);
  CHECK(print_program(with.programs[0].program) == "DIFF(CV(32,32), CV(33,33))");
  CHECK(with.programs[0].weight == 1.0);
  auto without = synthesize(ctx, SynthesisMode::WithoutDerivation);
  CHECK(std::any_of(without.programs.begin(), without.programs.end(),
                    [&](const PseudoProgram& p) { return p.program == with.programs[0].program; }));
}

TEST_CASE("with-derivation mode drops unusable derivations") {
  auto ctx = test::load_one("figure1.json");
  ctx.derivation = "0.99-0.47";
  CHECK_FALSE(synthesize(ctx, SynthesisMode::WithDerivation).covered());
}

TEST_CASE("time budget truncates instead of failing") {
  oracle::Rng rng(4);
  HybridContext ctx;
  ctx.question = "What was the total?";
  std::vector<std::vector<std::string>> grid(14, std::vector<std::string>(14));
  for (auto& row : grid) {
    for (auto& c : row) c = std::to_string(rng.uniform(100, 99999)) + "." + std::to_string(rng.uniform(1, 9));
  }
  ctx.table = Table::from_grid(grid);
  ctx.gold_answer = make_number_answer(-123456.789);
  SynthesisConfig cfg;
  cfg.per_instance_time_budget = std::chrono::milliseconds(1);
  auto r = Synthesizer(ctx, cfg).search_arithmetic();
  CHECK(r.truncated);
  cfg.per_instance_time_budget = std::chrono::milliseconds(0);
  CHECK_THROWS_AS(cfg.check(), ConfigError);
}

TEST_CASE("oversize contexts are skipped in batches") {
  auto ctx = test::load_one("figure1.json");
  SynthesisConfig cfg;
  cfg.max_context_length = 10;
  CHECK_THROWS_AS(synthesize(ctx, SynthesisMode::WithoutDerivation, cfg), OversizeContext);
  auto sets = synthesize_batch({ctx, ctx}, SynthesisMode::WithoutDerivation, cfg);
  REQUIRE(sets.size() == 2);
  CHECK(sets[0].oversize);
  CHECK_FALSE(sets[0].covered());
  CHECK(sets[1].instance_id == ctx.id);
  cfg.max_context_length = 2048;
  CHECK_FALSE(synthesize_batch({ctx}, SynthesisMode::WithoutDerivation, cfg)[0].oversize);
}

TEST_CASE("disabled operations never appear in results") {
  auto ctx = test::load_one("figure1.json");
  auto full = synthesize(ctx, SynthesisMode::WithoutDerivation);
  auto uses_diff = [](const PseudoProgramSet& set) {
    return std::any_of(set.programs.begin(), set.programs.end(),
                       [](const PseudoProgram& p) { return p.program.root.op == Op::Diff; });
  };
  REQUIRE(uses_diff(full));
  LegalityConfig legality;
  legality.disable(Op::Diff);
  auto sets = synthesize_batch({ctx}, SynthesisMode::WithoutDerivation, {}, legality);
  CHECK_FALSE(uses_diff(sets[0]));
}

TEST_CASE("supervision export") {
  std::ostringstream empty;
  export_supervision(empty, {});
  std::istringstream empty_in(empty.str());
  CHECK(read_supervision(empty_in).empty());
  CHECK(empty.str().find("\"records\":0") != std::string::npos);

  PseudoProgramSet set;
  set.instance_id = "i1";
  for (const char* p : {"DIFF(CV(32,32), CV(33,33))", "SPAN(1,1)"}) {
    PseudoProgram pp;
    pp.program = parse_program(p);
    pp.signature = operation_signature(pp.program);
    set.programs.push_back(pp);
  }
  assign_weights(set);
  std::ostringstream out;
  export_supervision(out, {set});
  std::istringstream in(out.str());
  auto records = read_supervision(in);
  REQUIRE(records.size() == 2);
  CHECK(records[0].instance_id == "i1");
  CHECK(records[1].instance_id == "i1");
  CHECK(records[0].token_ids.front() == 0);
  CHECK(records[0].token_ids.back() == 1);
  CHECK(records == supervision_records({set}));
  auto weights = recompute_weights(records);
  CHECK(weights == std::vector<double>{1.0, 1.0});

  std::istringstream bad("{\"not\":\"a header\"}\n");
  CHECK_THROWS_AS(read_supervision(bad), SchemaError);
}

TEST_CASE("synthesis config checks") {
  SynthesisConfig cfg;
  cfg.max_occurrences_per_span = 0;
  CHECK_THROWS_AS(cfg.check(), ConfigError);
  CHECK(parse_synthesis_mode("with-derivation") == SynthesisMode::WithDerivation);
  CHECK_FALSE(parse_synthesis_mode("both").has_value());
}
