#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rpg/answer.hpp"
#include "rpg/knowledge.hpp"
#include "rpg/legality.hpp"
#include "rpg/metrics.hpp"
#include "rpg/synthesis.hpp"

namespace rpg {

using Json = nlohmann::ordered_json;

inline constexpr int kContextSchemaVersion = 1;

Json answer_to_json(const Answer& answer);
// `path` is the JSON path used in SchemaError messages.
Answer answer_from_json(const nlohmann::json& j, const std::string& path = "$");

Json context_to_json(const HybridContext& ctx);
HybridContext context_from_json(const nlohmann::json& j, const std::string& path = "$");

// Native context files: one context object, an array of them, or
// {"schema_version": 1, "contexts": [...]}.
std::vector<HybridContext> parse_contexts(const nlohmann::json& j);
std::vector<HybridContext> load_contexts(const std::string& path);
void save_contexts(std::ostream& out, const std::vector<HybridContext>& contexts);

// TAT-QA release format (array of table/paragraphs/questions blocks). One
// context per question; paragraphs carry rank_score from rank_paragraphs.
std::vector<HybridContext> parse_tatqa(const nlohmann::json& j);
std::vector<HybridContext> load_tatqa(const std::string& path);

// DROP format ({passage_id: {passage, qa_pairs}}); contexts are table-free.
std::vector<HybridContext> parse_drop(const nlohmann::json& j);
std::vector<HybridContext> load_drop(const std::string& path);

// Picks the loader from the file's shape.
std::vector<HybridContext> load_any(const std::string& path);

// JSONL of {"id", "answer"} or {"id", "error"} records.
std::vector<Prediction> read_predictions(std::istream& in);
std::vector<Prediction> load_predictions(const std::string& path);

struct RunConfig {
  SynthesisMode mode = SynthesisMode::WithoutDerivation;
  std::string data_path;
  std::string out_path;
  LegalityConfig legality;
  SynthesisConfig synthesis;
  std::string tokenizer = "default";
  std::size_t max_context_length = 2048;
  int workers = 0;  // 0: OpenMP default

  // Throws ConfigError on an invalid field.
  void check() const;
};

// Unknown keys anywhere in the document raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

// RPG_MODE, RPG_WORKERS, RPG_MAX_CONTEXT_LENGTH, RPG_MAX_PROGRAM_TOKENS,
// RPG_MAX_SPAN_LENGTH, RPG_TIME_BUDGET_MS, RPG_NUMERIC_TOLERANCE,
// RPG_NESTED_TEMPLATES.
using EnvLookup = std::function<const char*(const char*)>;
void apply_env_overrides(RunConfig& config, const EnvLookup& lookup);
void apply_env_overrides(RunConfig& config);

nlohmann::json read_json_file(const std::string& path);

}  // namespace rpg
