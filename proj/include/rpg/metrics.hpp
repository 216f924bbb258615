#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rpg/answer.hpp"
#include "rpg/knowledge.hpp"

namespace rpg {

struct InstanceScore {
  double em = 0.0;
  double f1 = 0.0;
  bool operator==(const InstanceScore&) const = default;
};

// Bag-of-tokens F1 over normalized answer text.
double span_f1(std::string_view predicted, std::string_view gold);

// Maximum-weight one-to-one assignment for a rectangular weight matrix
// (rows x cols). Entry i is the column assigned to row i, or -1.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights);

// Sum of aligned pair F1 over max(|pred|, |gold|).
double multi_span_f1(const std::vector<std::string>& predicted,
                     const std::vector<std::string>& gold);
// Greedy highest-pair-first alignment; a baseline for the optimal one.
double multi_span_f1_greedy(const std::vector<std::string>& predicted,
                            const std::vector<std::string>& gold);

// Numbers score 1 only when equal after 4-dp rounding; text uses bag F1,
// span sets use optimal alignment. A scale mismatch zeroes both scores; an
// absent scale reads as None.
InstanceScore score_instance(const Answer& predicted, const Answer& gold);

struct Prediction {
  std::string id;
  std::optional<Answer> answer;  // empty when unanswered or failed
};

struct InstanceResult {
  std::string id;
  double em = 0.0;
  double f1 = 0.0;
  AnswerKind kind = AnswerKind::Span;
  AnswerSource source = AnswerSource::Text;
  bool answered = false;
};

struct BreakdownCell {
  double em_sum = 0.0;
  double f1_sum = 0.0;
  std::size_t count = 0;

  double em() const { return count ? em_sum / count : 0.0; }
  double f1() const { return count ? f1_sum / count : 0.0; }
};

struct EvalResult {
  double em = 0.0;
  double f1 = 0.0;
  std::vector<InstanceResult> per_instance;
  // [kind][source] in enum order.
  std::array<std::array<BreakdownCell, 3>, 4> breakdown{};
  std::size_t missing = 0;
};

// Source used for the breakdown when the gold context carries none.
AnswerSource effective_source(const HybridContext& gold);

// Scores every gold context that has an answer, in gold order. Missing
// predictions count as (0, 0). OpenMP over instances.
EvalResult score_dataset(const std::vector<Prediction>& predictions,
                         const std::vector<HybridContext>& golds);
EvalResult score_dataset_serial(const std::vector<Prediction>& predictions,
                                const std::vector<HybridContext>& golds);

}  // namespace rpg
