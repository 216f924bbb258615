// rpg: command-line front end for the program DSL, legality masks, the
// executor, pseudo-program search and evaluation.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <omp.h>

#include "rpg/error.hpp"
#include "rpg/executor.hpp"
#include "rpg/io.hpp"
#include "rpg/legality.hpp"
#include "rpg/metrics.hpp"
#include "rpg/program.hpp"
#include "rpg/synthesis.hpp"

namespace {

using rpg::Json;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kUsage = 2;

void emit(const Json& j) { std::cout << j.dump() << '\n'; }

int fail(const std::string& message, int code = kInvalid) {
  emit(Json{{"error", message}});
  std::cerr << "rpg: " << message << '\n';
  return code;
}

// Display value with 12 significant digits so float noise stays out of output.
double tidy(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

Json answer_json(const rpg::Answer& a) {
  Json j = rpg::answer_to_json(a);
  if (auto* n = std::get_if<rpg::Number>(&a.payload)) j["value"] = tidy(n->value);
  return j;
}

Json tokens_json(const std::vector<rpg::DecodingToken>& tokens) {
  Json out = Json::array();
  for (const auto& t : tokens) out.push_back({{"id", t.id()}, {"token", t.to_string()}});
  return out;
}

Json report_json(const rpg::ValidationReport& report) {
  Json violations = Json::array();
  for (const auto& v : report.violations) {
    violations.push_back({{"family", rpg::constraint_family_name(v.family)},
                          {"path", v.path},
                          {"message", v.message}});
  }
  return Json{{"ok", report.ok()}, {"violations", violations}};
}

struct ContextArgs {
  std::string path;
  std::string id;
};

rpg::HybridContext pick_context(const ContextArgs& args) {
  auto all = rpg::load_any(args.path);
  if (all.empty()) throw rpg::Error(args.path + " holds no contexts");
  if (args.id.empty()) return all.front();
  for (auto& c : all) {
    if (c.id == args.id) return c;
  }
  throw rpg::Error("no context with id \"" + args.id + "\" in " + args.path);
}

rpg::LegalityConfig legality_for(const rpg::HybridContext& ctx, const std::string& profile) {
  if (profile == "table-free" || (profile.empty() && ctx.table_free)) {
    return rpg::LegalityConfig::table_free_profile();
  }
  return rpg::LegalityConfig{};
}

rpg::RunConfig run_config(const std::string& path) {
  rpg::RunConfig c = path.empty() ? rpg::RunConfig{} : rpg::load_run_config(path);
  rpg::apply_env_overrides(c);
  return c;
}

int cmd_parse(const std::string& text) {
  rpg::Program p = rpg::parse_program(text);
  auto tokens = rpg::to_decoding_tokens(p);
  emit(Json{{"program", rpg::print_program(p)},
            {"signature", rpg::operation_signature(p)},
            {"length", rpg::decoding_length(p)},
            {"tokens", tokens_json(tokens)}});
  return kOk;
}

int cmd_check(const std::string& text, const ContextArgs& ctx_args, const std::string& profile) {
  rpg::Program p = rpg::parse_program(text);
  rpg::ValidationReport report;
  if (ctx_args.path.empty()) {
    rpg::LegalityConfig cfg = profile == "table-free" ? rpg::LegalityConfig::table_free_profile()
                                                      : rpg::LegalityConfig{};
    report = rpg::validate_structure(p, cfg);
  } else {
    auto ctx = pick_context(ctx_args);
    report = rpg::validate(p, rpg::linearize(ctx), legality_for(ctx, profile));
  }
  Json j = report_json(report);
  j["program"] = rpg::print_program(p);
  emit(j);
  return report.ok() ? kOk : kInvalid;
}

int cmd_exec(const ContextArgs& ctx_args, const std::string& text, const std::string& scale_text) {
  auto ctx = pick_context(ctx_args);
  rpg::Synthesizer synth(ctx);
  rpg::Program p;
  if (text.empty()) {
    auto derived = synth.program_from_derivation();
    if (!derived) return fail("no --program given and the context has no groundable derivation");
    p = *derived;
  } else {
    p = rpg::parse_program(text);
  }
  auto report = rpg::validate(p, synth.input(), synth.legality());
  if (!report.ok()) {
    Json j = report_json(report);
    j["program"] = rpg::print_program(p);
    emit(j);
    return kInvalid;
  }
  std::optional<rpg::Scale> scale = ctx.gold_scale;
  if (!scale_text.empty()) {
    scale = rpg::parse_scale(scale_text);
    if (!scale) return fail("unknown scale \"" + scale_text + "\"", kUsage);
  }
  try {
    rpg::Answer a = rpg::execute(p, synth.input(), scale);
    Json j = answer_json(a);
    j["program"] = rpg::print_program(p);
    if (ctx.gold_answer) j["matches_gold"] = rpg::answers_match(a, *ctx.gold_answer);
    emit(j);
  } catch (const rpg::ExecutionError& e) {
    return fail(e.what());
  }
  return kOk;
}

int cmd_mask(const ContextArgs& ctx_args, const std::string& prefix, const std::string& profile) {
  auto ctx = pick_context(ctx_args);
  auto input = rpg::linearize(ctx);
  auto session = rpg::open_session(input, legality_for(ctx, profile));
  auto tokens = rpg::parse_token_list(prefix);
  std::size_t i = 0;
  if (!tokens.empty() && tokens.front() == rpg::DecodingToken::bos()) i = 1;
  for (; i < tokens.size(); ++i) {
    if (!session.is_legal(tokens[i])) {
      return fail("token " + tokens[i].to_string() + " at position " + std::to_string(i) +
                  " is not legal here");
    }
    session.advance(tokens[i]);
  }
  Json j{{"prefix", tokens_json(session.prefix())},
         {"closed", session.closed()},
         {"legal", tokens_json(session.legal_next())}};
  if (session.closed()) j["program"] = rpg::print_program(*session.program());
  emit(j);
  return kOk;
}

int cmd_linearize(const ContextArgs& ctx_args, bool masks) {
  auto ctx = pick_context(ctx_args);
  auto input = rpg::linearize(ctx);
  Json tokens = Json::array();
  for (int i = 0; i < input.size(); ++i) {
    const auto& t = input.tokens[i];
    Json tj{{"index", i}, {"surface", t.surface}};
    const auto& p = t.provenance;
    switch (p.kind) {
      case rpg::RegionKind::Question: tj["region"] = "question"; break;
      case rpg::RegionKind::TableCell:
        tj["region"] = "cell";
        tj["row"] = p.row;
        tj["col"] = p.col;
        break;
      case rpg::RegionKind::Paragraph:
        tj["region"] = "paragraph";
        tj["paragraph"] = p.paragraph;
        break;
      case rpg::RegionKind::Separator: tj["region"] = "separator"; break;
    }
    tokens.push_back(tj);
  }
  Json j{{"id", ctx.id}, {"size", input.size()}, {"tokens", tokens}};
  if (masks) {
    auto m = rpg::build_attention_masks(input);
    Json lower = Json::array();
    Json upper = Json::array();
    for (int r = 0; r < m.size(); ++r) {
      std::string lo, up;
      for (int c = 0; c < m.size(); ++c) {
        lo += m.lower(r, c) ? '1' : '0';
        up += m.upper(r, c) ? '1' : '0';
      }
      lower.push_back(lo);
      upper.push_back(up);
    }
    j["lower"] = lower;
    j["upper"] = upper;
  }
  emit(j);
  return kOk;
}

int cmd_search(const std::string& data, const std::string& mode_text, const std::string& out_path,
               const std::string& config_path, std::string summary_path,
               const std::string& augment_path) {
  rpg::RunConfig cfg = run_config(config_path);
  if (!mode_text.empty()) {
    auto m = rpg::parse_synthesis_mode(mode_text);
    if (!m) return fail("unknown mode \"" + mode_text + "\"", kUsage);
    cfg.mode = *m;
  }
  const std::string data_path = data.empty() ? cfg.data_path : data;
  if (data_path.empty()) return fail("--data is required", kUsage);
  if (cfg.workers > 0) omp_set_num_threads(cfg.workers);
  cfg.synthesis.max_context_length = cfg.max_context_length;

  auto contexts = rpg::load_any(data_path);
  auto sets = rpg::synthesize_batch(contexts, cfg.mode, cfg.synthesis, cfg.legality);

  const std::string out = out_path.empty() ? cfg.out_path : out_path;
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) return fail("cannot write " + out);
    rpg::export_supervision(f, sets);
  }
  std::size_t covered = 0, programs = 0, truncated = 0, oversize = 0;
  for (const auto& s : sets) {
    if (s.covered()) {
      ++covered;
      programs += s.programs.size();
    }
    if (s.truncated) ++truncated;
    if (s.oversize) ++oversize;
  }
  Json summary{{"schema_version", rpg::kSupervisionSchemaVersion},
               {"mode", rpg::synthesis_mode_name(cfg.mode)},
               {"instances", sets.size()},
               {"covered", covered},
               {"coverage", sets.empty() ? 0.0 : tidy(double(covered) / sets.size())},
               {"programs", programs},
               {"mean_programs_per_covered", covered ? tidy(double(programs) / covered) : 0.0},
               {"truncated", truncated},
               {"oversize", oversize}};
  if (!augment_path.empty()) {
    std::vector<rpg::HybridContext> augmented;
    for (const auto& c : contexts) {
      if (auto aug = rpg::augment_counting(c, cfg.synthesis)) augmented.push_back(aug->context);
    }
    std::ofstream f(augment_path);
    if (!f) return fail("cannot write " + augment_path);
    rpg::save_contexts(f, augmented);
    summary["augmented"] = augmented.size();
  }
  if (summary_path.empty() && !out.empty()) summary_path = out + ".summary.json";
  if (!summary_path.empty()) {
    std::ofstream f(summary_path);
    if (!f) return fail("cannot write " + summary_path);
    f << summary.dump(2) << '\n';
  }
  emit(summary);
  return kOk;
}

int cmd_eval(const std::string& pred_path, const std::string& gold_path) {
  auto preds = rpg::load_predictions(pred_path);
  auto golds = rpg::load_any(gold_path);
  auto result = rpg::score_dataset(preds, golds);
  Json breakdown = Json::object();
  for (auto kind : {rpg::AnswerKind::Span, rpg::AnswerKind::Spans, rpg::AnswerKind::Number,
                    rpg::AnswerKind::Count}) {
    Json row = Json::object();
    for (auto source : {rpg::AnswerSource::Table, rpg::AnswerSource::Text,
                        rpg::AnswerSource::TableText}) {
      const auto& cell = result.breakdown[static_cast<int>(kind)][static_cast<int>(source)];
      row[std::string(rpg::answer_source_name(source))] =
          Json{{"em", tidy(cell.em())}, {"f1", tidy(cell.f1())}, {"count", cell.count}};
    }
    breakdown[std::string(rpg::answer_kind_name(kind))] = row;
  }
  emit(Json{{"em", tidy(result.em)},
            {"f1", tidy(result.f1)},
            {"count", result.per_instance.size()},
            {"missing", result.missing},
            {"breakdown", breakdown}});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UniRPG symbolic toolkit: DSL, legality, executor, synthesis, metrics"};
  app.require_subcommand(1);

  std::string program, profile, scale, prefix, mode, out, config, summary, augment, pred, gold,
      data;
  ContextArgs ctx;
  bool masks = false;

  auto* parse = app.add_subcommand("parse", "Parse and print a program with its decoding tokens");
  parse->add_option("program", program, "Program text")->required();

  auto* check = app.add_subcommand("check", "Validate a program");
  check->add_option("program", program, "Program text")->required();
  check->add_option("--context", ctx.path, "Context file (structure-only check without one)");
  check->add_option("--id", ctx.id, "Context id within the file");
  check->add_option("--profile", profile, "Legality profile")
      ->check(CLI::IsMember({"default", "table-free"}));

  auto* exec = app.add_subcommand("exec", "Execute a program over a context");
  exec->add_option("--context", ctx.path, "Context file")->required();
  exec->add_option("--id", ctx.id, "Context id within the file");
  exec->add_option("--program", program, "Program text (default: the grounded derivation)");
  exec->add_option("--scale", scale, "Answer scale");

  auto* mask = app.add_subcommand("mask", "Legal next decoding tokens after a prefix");
  mask->add_option("--context", ctx.path, "Context file")->required();
  mask->add_option("--id", ctx.id, "Context id within the file");
  mask->add_option("--prefix", prefix, "Decoding-token prefix, e.g. \"BOS OP(DIFF)\"");
  mask->add_option("--profile", profile, "Legality profile")
      ->check(CLI::IsMember({"default", "table-free"}));

  auto* lin = app.add_subcommand("linearize", "Linearized input with provenance");
  lin->add_option("--context", ctx.path, "Context file")->required();
  lin->add_option("--id", ctx.id, "Context id within the file");
  lin->add_flag("--masks", masks, "Include the attention masks");

  auto* search = app.add_subcommand("search", "Search pseudo programs for a dataset");
  search->add_option("--data", data, "Dataset (native, TAT-QA or DROP JSON)");
  search->add_option("--mode", mode, "with-derivation | without-derivation");
  search->add_option("--out", out, "Supervision JSONL output");
  search->add_option("--config", config, "Run configuration JSON");
  search->add_option("--summary", summary, "Coverage summary path (default <out>.summary.json)");
  search->add_option("--augment-out", augment, "Counting-augmented instances output");

  auto* eval = app.add_subcommand("eval", "Score predictions against gold answers");
  eval->add_option("--pred", pred, "Predictions JSONL")->required();
  eval->add_option("--gold", gold, "Gold dataset")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*parse) return cmd_parse(program);
    if (*check) return cmd_check(program, ctx, profile);
    if (*exec) return cmd_exec(ctx, program, scale);
    if (*mask) return cmd_mask(ctx, prefix, profile);
    if (*lin) return cmd_linearize(ctx, masks);
    if (*search) return cmd_search(data, mode, out, config, summary, augment);
    if (*eval) return cmd_eval(pred, gold);
  } catch (const rpg::ConfigError& e) {
    return fail(e.what(), kUsage);
  } catch (const rpg::Error& e) {
    return fail(e.what());
  }
  return kUsage;
}
