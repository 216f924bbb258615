#include <doctest.h>

#include <map>
#include <sstream>

#include "fixtures.hpp"
#include "rpg/error.hpp"
#include "rpg/io.hpp"

using namespace rpg;

TEST_CASE("native contexts round trip") {
  std::vector<HybridContext> all;
  for (const char* f : {"figure1.json", "sales_argmax.json", "mini6.json"}) {
    auto c = load_contexts(test::fixture(f));
    all.insert(all.end(), c.begin(), c.end());
  }
  auto tatqa = load_tatqa(test::fixture("tatqa_sample.json"));
  all.insert(all.end(), tatqa.begin(), tatqa.end());
  auto drop = load_drop(test::fixture("drop_passage.json"));
  all.insert(all.end(), drop.begin(), drop.end());

  std::ostringstream out;
  save_contexts(out, all);
  auto back = parse_contexts(nlohmann::json::parse(out.str()));
  REQUIRE(back.size() == all.size());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(back[i] == all[i]);
}

TEST_CASE("native loader rejects unknown keys") {
  auto j = nlohmann::json::parse(R"({"id":"x","question":"q","tabel":[]})");
  CHECK_THROWS_AS(context_from_json(j), SchemaError);
  auto a = nlohmann::json::parse(R"({"kind":"NUMBER","value":1,"unit":"x"})");
  CHECK_THROWS_AS(answer_from_json(a), SchemaError);
}

TEST_CASE("TAT-QA sample") {
  auto contexts = load_tatqa(test::fixture("tatqa_sample.json"));
  REQUIRE(contexts.size() == 3);
  int with_derivation = 0;
  for (const auto& c : contexts) with_derivation += c.derivation.has_value();
  CHECK(with_derivation == 1);
  CHECK(contexts[0].id == "q-0001");
  CHECK(contexts[0].gold_scale == Scale::Thousand);
  CHECK(contexts[0].gold_answer->kind == AnswerKind::Number);
  CHECK(contexts[0].answer_source == AnswerSource::Table);
  CHECK(contexts[1].gold_answer->kind == AnswerKind::Spans);
  CHECK(contexts[1].gold_scale == Scale::None);
  for (const auto& p : contexts[0].paragraphs) CHECK(p.rank_score.has_value());
}

TEST_CASE("TAT-QA schema errors") {
  auto j = nlohmann::json::parse(R"([{"table":{"uid":"t","table":[["a"]]},"paragraphs":[],
    "questions":[{"uid":"q","order":1,"question":"?","answer":1,"derivation":"",
    "answer_type":"guess","answer_from":"table","scale":""}]}])");
  try {
    parse_tatqa(j);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.path().find("answer_type") != std::string::npos);
  }
  auto empty = nlohmann::json::parse(R"([{"table":{"uid":"t","table":[["a"]]},"paragraphs":[],
    "questions":[]}])");
  CHECK(parse_tatqa(empty).empty());
}

TEST_CASE("DROP passages") {
  auto contexts = load_drop(test::fixture("drop_passage.json"));
  REQUIRE(contexts.size() == 3);
  for (const auto& c : contexts) {
    CHECK(c.table.empty());
    CHECK(c.table_free);
    CHECK(c.paragraphs.size() == 1);
  }
  CHECK(contexts[0].gold_answer->kind == AnswerKind::Number);
  CHECK(contexts[0].gold_scale == Scale::None);
  CHECK(contexts[1].gold_answer->kind == AnswerKind::Spans);
  CHECK(load_any(test::fixture("drop_passage.json")) == contexts);
}

TEST_CASE("predictions") {
  std::istringstream in(
      "{\"id\":\"a\",\"answer\":{\"kind\":\"NUMBER\",\"value\":0.06}}\n"
      "\n"
      "{\"id\":\"b\",\"error\":\"DivisionByZero\"}\n");
  auto preds = read_predictions(in);
  REQUIRE(preds.size() == 2);
  CHECK(preds[0].answer->kind == AnswerKind::Number);
  CHECK_FALSE(preds[1].answer.has_value());
  std::istringstream bad("{\"answer\":{}}\n");
  CHECK_THROWS_AS(read_predictions(bad), SchemaError);
}

TEST_CASE("run config") {
  auto cfg = run_config_from_json(nlohmann::json::parse(R"({
    "mode": "with-derivation",
    "legality": {"max_program_tokens": 40, "disabled_ops": ["TIMES"]},
    "synthesis": {"numeric_tolerance": 1e-4, "per_instance_time_budget_ms": 200},
    "workers": 2
  })"));
  CHECK(cfg.mode == SynthesisMode::WithDerivation);
  CHECK(cfg.legality.max_program_tokens == 40);
  CHECK_FALSE(cfg.legality.enabled(Op::Times));
  CHECK(cfg.synthesis.per_instance_time_budget.count() == 200);
  CHECK(cfg.workers == 2);

  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"mdoe":"x"})")), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"legality":{"span":3}})")),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"mode":"sideways"})")),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"legality":{"max_program_tokens":0}})")),
                  ConfigError);
}

TEST_CASE("environment overrides") {
  std::map<std::string, std::string> env = {{"RPG_MODE", "with-derivation"},
                                            {"RPG_MAX_PROGRAM_TOKENS", "30"},
                                            {"RPG_NESTED_TEMPLATES", "0"},
                                            {"RPG_TIME_BUDGET_MS", "50"}};
  auto lookup = [&](const char* name) -> const char* {
    auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  RunConfig cfg;
  apply_env_overrides(cfg, lookup);
  CHECK(cfg.mode == SynthesisMode::WithDerivation);
  CHECK(cfg.legality.max_program_tokens == 30);
  CHECK_FALSE(cfg.synthesis.enable_nested_templates);
  CHECK(cfg.synthesis.per_instance_time_budget.count() == 50);

  env = {{"RPG_WORKERS", "many"}};
  RunConfig other;
  CHECK_THROWS_AS(apply_env_overrides(other, lookup), ConfigError);
}
