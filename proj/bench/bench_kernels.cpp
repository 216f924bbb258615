// Serial reference vs OpenMP kernels: attention masks, batch synthesis and
// dataset scoring.

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "rpg/io.hpp"
#include "rpg/knowledge.hpp"
#include "rpg/metrics.hpp"
#include "rpg/synthesis.hpp"

namespace {

rpg::LinearizedInput wide_input(int rows, int cols) {
  std::mt19937_64 gen(1);
  std::vector<std::vector<std::string>> grid(rows, std::vector<std::string>(cols));
  for (auto& row : grid) {
    for (auto& c : row) c = std::to_string(gen() % 100000) + " units";
  }
  rpg::HybridContext ctx;
  ctx.question = "What was the total across all segments?";
  ctx.table = rpg::Table::from_grid(grid);
  ctx.paragraphs = {{0, "Segment results are summarized in the table above.", {}}};
  return rpg::linearize(ctx);
}

const std::vector<rpg::HybridContext>& corpus() {
  static const auto contexts = rpg::load_tatqa(std::string(RPG_FIXTURE_DIR) + "/synthetic_tatqa.json");
  return contexts;
}

void BM_MasksSerial(benchmark::State& state) {
  auto input = wide_input(static_cast<int>(state.range(0)), 8);
  for (auto _ : state) benchmark::DoNotOptimize(rpg::build_attention_masks_serial(input));
  state.counters["tokens"] = input.size();
}

void BM_MasksParallel(benchmark::State& state) {
  auto input = wide_input(static_cast<int>(state.range(0)), 8);
  for (auto _ : state) benchmark::DoNotOptimize(rpg::build_attention_masks(input));
  state.counters["tokens"] = input.size();
}

void BM_SynthesisSerial(benchmark::State& state) {
  const auto& contexts = corpus();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        rpg::synthesize_batch_serial(contexts, rpg::SynthesisMode::WithoutDerivation));
  }
  state.counters["instances"] = static_cast<double>(contexts.size());
}

void BM_SynthesisParallel(benchmark::State& state) {
  const auto& contexts = corpus();
  for (auto _ : state) {
    benchmark::DoNotOptimize(rpg::synthesize_batch(contexts, rpg::SynthesisMode::WithoutDerivation));
  }
  state.counters["instances"] = static_cast<double>(contexts.size());
}

std::vector<rpg::Prediction> noisy_predictions(const std::vector<rpg::HybridContext>& golds) {
  std::vector<rpg::Prediction> out;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    auto answer = *golds[i].gold_answer;
    if (i % 3 == 0) answer = rpg::make_text_answer({"none of these"});
    out.push_back({golds[i].id, answer});
  }
  return out;
}

std::vector<rpg::HybridContext> scoring_golds(std::size_t copies) {
  std::vector<rpg::HybridContext> out;
  for (std::size_t c = 0; c < copies; ++c) {
    for (auto ctx : corpus()) {
      ctx.id += "/" + std::to_string(c);
      out.push_back(std::move(ctx));
    }
  }
  return out;
}

void BM_ScoringSerial(benchmark::State& state) {
  auto golds = scoring_golds(static_cast<std::size_t>(state.range(0)));
  auto preds = noisy_predictions(golds);
  for (auto _ : state) benchmark::DoNotOptimize(rpg::score_dataset_serial(preds, golds));
}

void BM_ScoringParallel(benchmark::State& state) {
  auto golds = scoring_golds(static_cast<std::size_t>(state.range(0)));
  auto preds = noisy_predictions(golds);
  for (auto _ : state) benchmark::DoNotOptimize(rpg::score_dataset(preds, golds));
}

}  // namespace

BENCHMARK(BM_MasksSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MasksParallel)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SynthesisSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SynthesisParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoringSerial)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoringParallel)->Arg(10)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
