#pragma once

#include <chrono>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rpg/knowledge.hpp"
#include "rpg/legality.hpp"
#include "rpg/program.hpp"

namespace rpg {

struct SynthesisConfig {
  double numeric_tolerance = 5e-5;
  int max_occurrences_per_span = 4;
  int max_multispan_combinations = 64;
  std::optional<int> max_arith_numbers;  // unset: every number in context
  std::chrono::milliseconds per_instance_time_budget{1000};
  bool enable_nested_templates = true;
  std::size_t max_context_length = 2048;  // linearization cap

  // Throws ConfigError unless every cap is positive.
  void check() const;
  bool operator==(const SynthesisConfig&) const = default;
};

enum class SynthesisMode { WithDerivation, WithoutDerivation };

std::string_view synthesis_mode_name(SynthesisMode mode);
std::optional<SynthesisMode> parse_synthesis_mode(std::string_view text);

enum class TemplateCategory { Extraction, MultiSpans, Counting, Comparison, Arithmetic, Derivation };

std::string_view template_category_name(TemplateCategory category);

// A search hit. The program's value times `answer_factor` is the gold value;
// the factor is 100 or 0.01 when a percent-phrased gold was matched.
struct Candidate {
  Program program;
  double answer_factor = 1.0;
  TemplateCategory category = TemplateCategory::Extraction;

  bool operator==(const Candidate&) const = default;
};

struct SearchResult {
  std::vector<Candidate> candidates;
  bool truncated = false;  // time budget hit before the search finished
};

struct PseudoProgram {
  Program program;
  double weight = 1.0;
  std::string signature;
  double answer_factor = 1.0;
  TemplateCategory category = TemplateCategory::Extraction;

  bool operator==(const PseudoProgram&) const = default;
};

struct PseudoProgramSet {
  std::string instance_id;
  std::vector<PseudoProgram> programs;
  bool truncated = false;
  bool oversize = false;  // skipped: context over the length cap

  bool covered() const { return !programs.empty(); }
};

// A counting instance built from a multi-span one.
struct AugmentedInstance {
  HybridContext context;
  PseudoProgramSet programs;
};

// Template search over one hybrid context. Searches return candidates in a
// fixed order; synthesize filters them through validation and execution.
class Synthesizer {
 public:
  Synthesizer(HybridContext ctx, SynthesisConfig config = {});
  Synthesizer(HybridContext ctx, SynthesisConfig config, LegalityConfig legality);

  const HybridContext& context() const { return ctx_; }
  const LinearizedInput& input() const { return input_; }
  const LegalityConfig& legality() const { return legality_; }

  std::vector<Program> search_extraction() const;
  std::vector<Program> search_multispans() const;
  std::vector<Program> search_counting() const;
  std::vector<Program> search_comparison() const;
  SearchResult search_arithmetic() const;
  std::optional<Program> program_from_derivation() const;

  // Every candidate of the applicable templates for the gold answer kind,
  // before filtering.
  SearchResult candidates(SynthesisMode mode) const;

  PseudoProgramSet synthesize(SynthesisMode mode) const;

  // Does the candidate validate and execute to the gold answer?
  bool sound(const Candidate& candidate) const;

 private:
  struct Occurrence {
    Op op;
    int start;
    int end;
  };
  struct Operand {
    Node node;
    double value;
  };

  std::vector<Occurrence> text_occurrences(const std::string& item) const;
  std::vector<Occurrence> number_occurrences(double value) const;
  std::vector<std::vector<Occurrence>> combinations(
      const std::vector<std::string>& items) const;
  std::vector<Operand> arithmetic_operands() const;
  std::optional<Node> ground(double value) const;
  // (target value, factor) pairs: gold, gold x 100, gold / 100.
  std::vector<std::pair<double, double>> gold_targets() const;

  HybridContext ctx_;
  SynthesisConfig config_;
  LegalityConfig legality_;
  LinearizedInput input_;
  std::vector<std::string> token_norm_;
};

// α_G = 1 / |programs sharing the operation signature|.
void assign_weights(PseudoProgramSet& set);

// Table-free contexts run under the table-free variant of `legality`.
PseudoProgramSet synthesize(const HybridContext& ctx, SynthesisMode mode,
                            const SynthesisConfig& config = {},
                            const LegalityConfig& legality = {});

// Question with its first What/Which/Who replaced by "How many".
std::optional<std::string> counting_question(std::string_view question);

// Counting conversion of a multi-span instance; nullopt when the gold answer
// is not SPANS, the question has no interrogative to rewrite, or no item
// combination can be located.
std::optional<AugmentedInstance> augment_counting(const HybridContext& ctx,
                                                  const SynthesisConfig& config = {});

// OpenMP over instances, results in input order. Contexts over the length
// cap come back empty with `oversize` set.
std::vector<PseudoProgramSet> synthesize_batch(const std::vector<HybridContext>& contexts,
                                               SynthesisMode mode,
                                               const SynthesisConfig& config = {},
                                               const LegalityConfig& legality = {});
std::vector<PseudoProgramSet> synthesize_batch_serial(
    const std::vector<HybridContext>& contexts, SynthesisMode mode,
    const SynthesisConfig& config = {}, const LegalityConfig& legality = {});

inline constexpr int kSupervisionSchemaVersion = 1;

struct SupervisionRecord {
  std::string instance_id;
  std::string program;
  std::vector<int> token_ids;
  double weight = 1.0;
  std::string signature;
  double answer_factor = 1.0;
  std::string category;

  bool operator==(const SupervisionRecord&) const = default;
};

std::vector<SupervisionRecord> supervision_records(const std::vector<PseudoProgramSet>& sets);

// JSONL: one header line, then one record per (instance, program).
void export_supervision(std::ostream& out, const std::vector<PseudoProgramSet>& sets);
// Throws SchemaError on a missing header or malformed record.
std::vector<SupervisionRecord> read_supervision(std::istream& in);

// Weights recomputed from the records' instance ids and signatures.
std::vector<double> recompute_weights(const std::vector<SupervisionRecord>& records);

}  // namespace rpg
