// Generates a synthetic corpus in the TAT-QA release format: financial
// tables with year columns, short paragraphs that restate some figures, and
// questions of every answer type with TAT-QA-style derivations and rounding.
//
//   make_corpus --blocks 34 --seed 7 --out fixtures/synthetic_tatqa.json

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

using nlohmann::ordered_json;

const std::vector<std::string> kItems = {
    "Revenue", "Cost of revenue", "Research and development", "Sales and marketing",
    "General and administrative", "Interest expense", "Deferred revenue",
    "Accounts receivable", "Inventories", "Goodwill", "Cash and cash equivalents",
    "Accrued liabilities", "Depreciation and amortization", "Capital expenditures",
    "Income tax expense", "Operating lease liabilities", "Share-based compensation",
    "Prepaid expenses", "Long-term debt", "Restructuring charges"};
const std::vector<std::string> kRegions = {"Americas", "Europe", "Japan", "Canada",
                                           "China", "Australia", "India", "Brazil"};
const std::vector<std::string> kSegments = {"Cloud", "Hardware", "Services", "Software",
                                            "Licensing", "Consulting", "Networking"};

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }
  template <typename T>
  std::vector<T> sample(const std::vector<T>& pool, std::size_t n) {
    std::vector<T> copy = pool;
    std::shuffle(copy.begin(), copy.end(), rng_);
    copy.resize(n);
    return copy;
  }

 private:
  std::mt19937_64 rng_;
};

std::string with_commas(long v) {
  std::string digits = std::to_string(std::labs(v));
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return v < 0 ? "(" + out + ")" : out;
}

std::string fixed(double v, int dp) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", dp, v);
  return buf;
}

// 2dp rounding as TAT-QA annotators report derived figures.
double round2(double v) { return std::round(v * 100.0) / 100.0; }

struct Row {
  std::string label;
  std::vector<long> values;  // one per year column
};

ordered_json question(const std::string& uid, int order, const std::string& text,
                      ordered_json answer, const std::string& derivation,
                      const std::string& type, const std::string& from,
                      const std::string& scale) {
  return ordered_json{{"uid", uid},
                      {"order", order},
                      {"question", text},
                      {"answer", answer},
                      {"derivation", derivation},
                      {"answer_type", type},
                      {"answer_from", from},
                      {"rel_paragraphs", ordered_json::array()},
                      {"req_comparison", false},
                      {"scale", scale}};
}

ordered_json block(Gen& g, int index, int per_block) {
  const int year0 = g.uniform(2017, 2020);
  const int ncols = g.chance(0.4) ? 3 : 2;
  std::vector<std::string> years;
  for (int c = 0; c < ncols; ++c) years.push_back(std::to_string(year0 - c));

  auto items = g.sample(kItems, g.uniform(4, 6));
  std::vector<Row> rows;
  for (const auto& label : items) {
    Row r{label, {}};
    long base = g.uniform(800, 95000);
    for (int c = 0; c < ncols; ++c) {
      r.values.push_back(base);
      base = std::max(100L, base + g.uniform(-base / 5, base / 5));
    }
    rows.push_back(r);
  }
  // Most statements close with a total of the line items.
  const bool has_total = g.chance(0.6);
  if (has_total) {
    Row total{"Total", std::vector<long>(ncols, 0)};
    for (const auto& r : rows) {
      for (int c = 0; c < ncols; ++c) total.values[c] += r.values[c];
    }
    rows.push_back(total);
  }

  ordered_json grid = ordered_json::array();
  ordered_json header = ordered_json::array({""});
  for (const auto& y : years) header.push_back(y);
  grid.push_back(header);
  for (const auto& r : rows) {
    ordered_json line = ordered_json::array({r.label});
    for (long v : r.values) line.push_back(with_commas(v));
    grid.push_back(line);
  }

  auto regions = g.sample(kRegions, 3);
  auto segments = g.sample(kSegments, g.uniform(2, 4));
  const int headcount = g.uniform(900, 25000);
  const double margin = g.uniform(150, 650) / 10.0;
  std::string seg_list;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    seg_list += (i == 0 ? "" : (i + 1 == segments.size() ? " and " : ", ")) + segments[i];
  }
  const Row& lead = rows[0];
  ordered_json paragraphs = ordered_json::array();
  paragraphs.push_back({{"uid", "p" + std::to_string(index) + "-1"},
                        {"order", 1},
                        {"text", "We report our results in " + std::to_string(segments.size()) +
                                     " segments: " + seg_list + ". " + lead.label +
                                     " in " + years[0] + " was driven mainly by growth in " +
                                     regions[0] + " and " + regions[1] +
                                     ", partly offset by lower demand in " + regions[2] + "."}});
  paragraphs.push_back({{"uid", "p" + std::to_string(index) + "-2"},
                        {"order", 2},
                        {"text", "As of December 31, " + years[0] + ", we had approximately " +
                                     with_commas(headcount) + " employees. Our gross margin was " +
                                     fixed(margin, 1) + "% for the year, compared with " +
                                     fixed(margin - g.uniform(5, 30) / 10.0, 1) + "% a year earlier."}});

  ordered_json questions = ordered_json::array();
  const std::string tag = "s" + std::to_string(index) + "-";
  auto pick_row = [&]() -> const Row& { return rows[g.uniform(0, static_cast<int>(rows.size()) - 1)]; };
  auto lower = [](std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    return s;
  };

  // Roughly the TAT-QA answer-type mix: arithmetic ~43%, span ~31%,
  // multi-span ~13%, count ~3%, with comparisons folded into span.
  for (int q = 0; q < per_block; ++q) {
    const std::string uid = tag + std::to_string(q + 1);
    const int kind = g.uniform(0, 99);
    const Row& r = pick_row();
    const long a = r.values[0];
    const long b = r.values[1];
    const std::string sa = with_commas(a), sb = with_commas(b);
    const std::string item = lower(r.label);
    if (kind < 14) {
      questions.push_back(question(uid, q + 1,
                                   "What was the change in " + item + " between " + years[1] +
                                       " and " + years[0] + "?",
                                   a - b, sa + " - " + sb, "arithmetic", "table", "thousand"));
    } else if (kind < 26) {
      const double pct = round2(100.0 * (a - b) / b);
      questions.push_back(question(uid, q + 1,
                                   "What was the percentage change in " + item + " between " +
                                       years[1] + " and " + years[0] + "?",
                                   pct, "(" + sa + " - " + sb + ")/" + sb, "arithmetic", "table",
                                   "percent"));
    } else if (kind < 33) {
      const double avg = (a + b) / 2.0;
      questions.push_back(question(uid, q + 1,
                                   "What was the average " + item + " for " + years[1] + " and " +
                                       years[0] + "?",
                                   avg, "(" + sa + " + " + sb + ")/2", "arithmetic", "table",
                                   "thousand"));
    } else if (kind < 38) {
      const Row& r2 = rows[(&r - rows.data() + 1) % rows.size()];
      questions.push_back(question(uid, q + 1,
                                   "What was the sum of " + item + " and " + lower(r2.label) +
                                       " in " + years[0] + "?",
                                   a + r2.values[0], sa + " + " + with_commas(r2.values[0]),
                                   "arithmetic", "table", "thousand"));
    } else if (kind < 41) {
      // Ratios are reported to 2dp, which often loses the exact quotient.
      const Row& r2 = rows[(&r - rows.data() + 1) % rows.size()];
      questions.push_back(question(uid, q + 1,
                                   "What was the ratio of " + item + " to " + lower(r2.label) +
                                       " in " + years[0] + "?",
                                   round2(double(a) / r2.values[0]),
                                   sa + "/" + with_commas(r2.values[0]), "arithmetic", "table", ""));
    } else if (kind < 43) {
      questions.push_back(question(uid, q + 1,
                                   "What was the gross margin in " + years[0] + "?",
                                   ordered_json::array({fixed(margin, 1) + "%"}), "", "span",
                                   "text", "percent"));
    } else if (kind < 56) {
      questions.push_back(question(uid, q + 1,
                                   "What was the " + item + " in " + years[0] + "?",
                                   ordered_json::array({sa}), "", "span", "table", "thousand"));
    } else if (kind < 62) {
      questions.push_back(question(uid, q + 1,
                                   "How many employees did the company have as of December 31, " +
                                       years[0] + "?",
                                   ordered_json::array({with_commas(headcount)}), "", "span",
                                   "text", ""));
    } else if (kind < 67) {
      questions.push_back(question(uid, q + 1,
                                   "Which region saw lower demand in " + years[0] + "?",
                                   ordered_json::array({regions[2]}), "", "span", "text", ""));
    } else if (kind < 74) {
      int best = 0;
      for (int c = 1; c < ncols; ++c) {
        if (r.values[c] > r.values[best]) best = c;
      }
      questions.push_back(question(uid, q + 1,
                                   "In which year was " + item + " the largest?",
                                   ordered_json::array({years[best]}), "", "span", "table", ""));
    } else if (kind < 80) {
      questions.push_back(question(uid, q + 1,
                                   "Which regions drove the growth in " + item + "?",
                                   ordered_json::array({regions[0], regions[1]}), "", "multi-span",
                                   "text", ""));
    } else if (kind < 87) {
      questions.push_back(question(uid, q + 1,
                                   "What were the " + item + " in " + years[0] + " and " +
                                       years[1] + "?",
                                   ordered_json::array({sa, sb}), "", "multi-span", "table",
                                   "thousand"));
    } else if (kind < 91) {
      std::string deriv;
      for (const auto& s : segments) deriv += (deriv.empty() ? "" : "##") + s;
      questions.push_back(question(uid, q + 1, "How many segments does the company report?",
                                   static_cast<int>(segments.size()), deriv, "count", "text", ""));
    } else if (kind < 96) {
      // Unit conversion by 1,000 is outside the constant set.
      questions.push_back(question(uid, q + 1,
                                   "What was the change in " + item + " from " + years[1] +
                                       " to " + years[0] + " in thousands of dollars, rounded?",
                                   std::round((a - b) / 1000.0), "(" + sa + " - " + sb + ")/1,000",
                                   "arithmetic", "table", "million"));
    } else {
      const double avg_change = round2(((a - b) / 2.0));
      questions.push_back(question(uid, q + 1,
                                   "What was the average annual change in " + item + "?",
                                   avg_change, "(" + sa + " - " + sb + ")/2", "arithmetic", "table",
                                   "thousand"));
    }
  }
  return ordered_json{{"table", {{"uid", "t" + std::to_string(index)}, {"table", grid}}},
                      {"paragraphs", paragraphs},
                      {"questions", questions}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic TAT-QA-format corpus generator"};
  int blocks = 34;
  int per_block = 6;
  std::uint64_t seed = 7;
  int limit = 200;
  std::string out;
  app.add_option("--blocks", blocks, "Number of table/paragraph blocks");
  app.add_option("--questions", per_block, "Questions per block");
  app.add_option("--limit", limit, "Total question cap");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", out, "Output path (stdout when omitted)");
  CLI11_PARSE(app, argc, argv);

  Gen g(seed);
  ordered_json corpus = ordered_json::array();
  int total = 0;
  for (int i = 0; i < blocks && total < limit; ++i) {
    auto b = block(g, i + 1, std::min(per_block, limit - total));
    total += static_cast<int>(b["questions"].size());
    corpus.push_back(std::move(b));
  }
  if (out.empty()) {
    std::cout << corpus.dump(1) << '\n';
  } else {
    std::ofstream f(out);
    f << corpus.dump(1) << '\n';
  }
  return 0;
}
