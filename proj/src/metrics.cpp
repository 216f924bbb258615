#include "rpg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "rpg/number.hpp"

namespace rpg {
namespace {

bool numeric_payload(const Answer& a) {
  return std::holds_alternative<Number>(a.payload) ||
         std::holds_alternative<CountVal>(a.payload);
}

std::vector<std::string> text_items(const Answer& a) {
  if (auto* t = std::get_if<Text>(&a.payload)) return t->items;
  if (auto v = numeric_value(a)) return {format_number(*v)};
  return {};
}

std::vector<std::vector<double>> f1_matrix(const std::vector<std::string>& p,
                                           const std::vector<std::string>& g) {
  std::vector<std::vector<double>> w(p.size(), std::vector<double>(g.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) w[i][j] = span_f1(p[i], g[j]);
  }
  return w;
}

std::vector<std::string> normalized_sorted(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& s : items) out.push_back(normalize_answer_text(s));
  std::sort(out.begin(), out.end());
  return out;
}

InstanceResult score_one(const HybridContext& gold,
                         const std::unordered_map<std::string, const Prediction*>& by_id) {
  InstanceResult r;
  r.id = gold.id;
  r.kind = gold.gold_answer->kind;
  r.source = effective_source(gold);
  auto it = by_id.find(gold.id);
  if (it != by_id.end() && it->second->answer) {
    r.answered = true;
    Answer g = *gold.gold_answer;
    if (!g.scale && gold.gold_scale) g.scale = gold.gold_scale;
    auto s = score_instance(*it->second->answer, g);
    r.em = s.em;
    r.f1 = s.f1;
  }
  return r;
}

EvalResult aggregate(std::vector<InstanceResult> results) {
  EvalResult out;
  for (const auto& r : results) {
    out.em += r.em;
    out.f1 += r.f1;
    if (!r.answered) ++out.missing;
    auto& cell = out.breakdown[static_cast<int>(r.kind)][static_cast<int>(r.source)];
    cell.em_sum += r.em;
    cell.f1_sum += r.f1;
    ++cell.count;
  }
  if (!results.empty()) {
    out.em /= results.size();
    out.f1 /= results.size();
  }
  out.per_instance = std::move(results);
  return out;
}

std::vector<const HybridContext*> scored(const std::vector<HybridContext>& golds) {
  std::vector<const HybridContext*> out;
  for (const auto& g : golds) {
    if (g.gold_answer) out.push_back(&g);
  }
  return out;
}

std::unordered_map<std::string, const Prediction*> index(const std::vector<Prediction>& preds) {
  std::unordered_map<std::string, const Prediction*> out;
  for (const auto& p : preds) out.emplace(p.id, &p);
  return out;
}

}  // namespace

double span_f1(std::string_view predicted, std::string_view gold) {
  auto p = normalized_tokens(predicted);
  auto g = normalized_tokens(gold);
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::map<std::string, int> bag;
  for (const auto& t : g) ++bag[t];
  int common = 0;
  for (const auto& t : p) {
    auto it = bag.find(t);
    if (it != bag.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / p.size();
  const double recall = static_cast<double>(common) / g.size();
  return 2 * precision * recall / (precision + recall);
}

// Hungarian method with potentials on the square padding of the matrix,
// minimizing negated weights.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights) {
  const int rows = static_cast<int>(weights.size());
  const int cols = rows ? static_cast<int>(weights[0].size()) : 0;
  const int n = std::max(rows, cols);
  std::vector<int> result(rows, -1);
  if (n == 0) return result;
  auto cost = [&](int i, int j) {
    return (i < rows && j < cols) ? -weights[i][j] : 0.0;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  for (int j = 1; j <= n; ++j) {
    const int i = p[j] - 1;
    if (i >= 0 && i < rows && j - 1 < cols) result[i] = j - 1;
  }
  return result;
}

double multi_span_f1(const std::vector<std::string>& predicted,
                     const std::vector<std::string>& gold) {
  if (predicted.empty() && gold.empty()) return 1.0;
  if (predicted.empty() || gold.empty()) return 0.0;
  auto w = f1_matrix(predicted, gold);
  auto assign = max_weight_assignment(w);
  double total = 0.0;
  for (std::size_t i = 0; i < assign.size(); ++i) {
    if (assign[i] >= 0) total += w[i][assign[i]];
  }
  return total / std::max(predicted.size(), gold.size());
}

double multi_span_f1_greedy(const std::vector<std::string>& predicted,
                            const std::vector<std::string>& gold) {
  if (predicted.empty() && gold.empty()) return 1.0;
  if (predicted.empty() || gold.empty()) return 0.0;
  auto w = f1_matrix(predicted, gold);
  std::vector<char> row_used(predicted.size()), col_used(gold.size());
  double total = 0.0;
  for (std::size_t step = 0; step < std::min(predicted.size(), gold.size()); ++step) {
    double best = -1.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      if (row_used[i]) continue;
      for (std::size_t j = 0; j < gold.size(); ++j) {
        if (!col_used[j] && w[i][j] > best) {
          best = w[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    row_used[bi] = col_used[bj] = 1;
    total += best;
  }
  return total / std::max(predicted.size(), gold.size());
}

InstanceScore score_instance(const Answer& predicted, const Answer& gold) {
  if (predicted.scale.value_or(Scale::None) != gold.scale.value_or(Scale::None)) {
    return {0.0, 0.0};
  }
  if (numeric_payload(predicted) || numeric_payload(gold)) {
    auto p = numeric_value(predicted);
    auto g = numeric_value(gold);
    const bool hit = p && g && round4(*p) == round4(*g);
    return hit ? InstanceScore{1.0, 1.0} : InstanceScore{0.0, 0.0};
  }
  auto p = text_items(predicted);
  auto g = text_items(gold);
  if (p.size() == 1 && g.size() == 1) {
    const double f1 = span_f1(p[0], g[0]);
    const double em = normalize_answer_text(p[0]) == normalize_answer_text(g[0]) ? 1.0 : 0.0;
    return {em, f1};
  }
  const double em = normalized_sorted(p) == normalized_sorted(g) ? 1.0 : 0.0;
  return {em, multi_span_f1(p, g)};
}

AnswerSource effective_source(const HybridContext& gold) {
  if (gold.answer_source) return *gold.answer_source;
  if (gold.table.empty()) return AnswerSource::Text;
  if (gold.paragraphs.empty()) return AnswerSource::Table;
  return AnswerSource::TableText;
}

EvalResult score_dataset(const std::vector<Prediction>& predictions,
                         const std::vector<HybridContext>& golds) {
  auto todo = scored(golds);
  auto by_id = index(predictions);
  std::vector<InstanceResult> results(todo.size());
  const long n = static_cast<long>(todo.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) results[i] = score_one(*todo[i], by_id);
  return aggregate(std::move(results));
}

EvalResult score_dataset_serial(const std::vector<Prediction>& predictions,
                                const std::vector<HybridContext>& golds) {
  auto by_id = index(predictions);
  std::vector<InstanceResult> results;
  for (const HybridContext* g : scored(golds)) results.push_back(score_one(*g, by_id));
  return aggregate(std::move(results));
}

}  // namespace rpg
