#include "rpg/io.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "rpg/error.hpp"
#include "rpg/number.hpp"

namespace rpg {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& path,
                    std::initializer_list<const char*> keys) {
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw SchemaError(path + "." + it.key(), "unknown key");
  }
}

const json& require(const json& j, const std::string& path, const char* key) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + "." + key, "missing");
  return *it;
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

double get_number(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    if (auto v = parse_number(j.get<std::string>())) return *v;
  }
  throw SchemaError(path, "expected a number");
}

std::vector<std::string> get_strings(const json& j, const std::string& path) {
  std::vector<std::string> out;
  if (j.is_string()) return {j.get<std::string>()};
  if (!j.is_array()) throw SchemaError(path, "expected a list of strings");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (j[i].is_number()) {
      out.push_back(format_number(j[i].get<double>()));
    } else {
      out.push_back(get_string(j[i], p));
    }
  }
  return out;
}

Scale get_scale(const json& j, const std::string& path) {
  auto s = parse_scale(get_string(j, path));
  if (!s) throw SchemaError(path, "unknown scale \"" + j.get<std::string>() + "\"");
  return *s;
}

AnswerSource get_source(const json& j, const std::string& path) {
  auto s = parse_answer_source(get_string(j, path));
  if (!s) throw SchemaError(path, "unknown answer source \"" + j.get<std::string>() + "\"");
  return *s;
}

std::vector<std::vector<std::string>> get_grid(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected a list of rows");
  std::vector<std::vector<std::string>> grid;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string p = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array()) throw SchemaError(p, "expected a row");
    grid.push_back(get_strings(j[r], p));
  }
  return grid;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
T env_number(const char* name, const char* value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (!in || !in.eof()) {
    throw ConfigError(std::string(name) + ": cannot parse \"" + value + "\"");
  }
  return out;
}

}  // namespace

nlohmann::json read_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError("$", path + ": " + e.what());
  }
}

Json answer_to_json(const Answer& a) {
  Json j;
  j["kind"] = answer_kind_name(a.kind);
  if (auto* t = std::get_if<Text>(&a.payload)) {
    j["items"] = t->items;
  } else if (auto* n = std::get_if<Number>(&a.payload)) {
    j["value"] = n->value;
  } else if (auto* c = std::get_if<CountVal>(&a.payload)) {
    j["value"] = c->value;
  } else if (auto* p = std::get_if<Pairs>(&a.payload)) {
    Json pairs = Json::array();
    for (const auto& [k, v] : p->items) pairs.push_back({k, v});
    j["pairs"] = pairs;
  }
  if (a.scale) j["scale"] = scale_name(*a.scale);
  return j;
}

Answer answer_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an answer object");
  reject_unknown(j, path, {"kind", "items", "value", "scale"});
  const std::string kind_text = get_string(require(j, path, "kind"), path + ".kind");
  auto kind = parse_answer_kind(kind_text);
  if (!kind) throw SchemaError(path + ".kind", "unknown answer kind \"" + kind_text + "\"");
  std::optional<Scale> scale;
  if (j.contains("scale")) scale = get_scale(j["scale"], path + ".scale");
  switch (*kind) {
    case AnswerKind::Span:
    case AnswerKind::Spans: {
      Answer a;
      a.kind = *kind;
      a.payload = Text{get_strings(require(j, path, "items"), path + ".items")};
      a.scale = scale;
      return a;
    }
    case AnswerKind::Number:
      return make_number_answer(get_number(require(j, path, "value"), path + ".value"), scale);
    case AnswerKind::Count: {
      const double v = get_number(require(j, path, "value"), path + ".value");
      return make_count_answer(static_cast<std::int64_t>(v), scale);
    }
  }
  throw SchemaError(path, "unreachable");
}

Json context_to_json(const HybridContext& ctx) {
  Json j;
  j["id"] = ctx.id;
  j["question"] = ctx.question;
  j["table"] = ctx.table.grid();
  Json paragraphs = Json::array();
  for (const auto& p : ctx.paragraphs) {
    Json pj = {{"id", p.id}, {"text", p.text}};
    if (p.rank_score) pj["rank_score"] = *p.rank_score;
    paragraphs.push_back(pj);
  }
  j["paragraphs"] = paragraphs;
  if (ctx.gold_answer) j["answer"] = answer_to_json(*ctx.gold_answer);
  if (ctx.gold_scale) j["scale"] = scale_name(*ctx.gold_scale);
  if (ctx.derivation) j["derivation"] = *ctx.derivation;
  if (ctx.answer_source) j["answer_source"] = answer_source_name(*ctx.answer_source);
  if (ctx.table_free) j["table_free"] = true;
  return j;
}

HybridContext context_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected a context object");
  reject_unknown(j, path, {"id", "question", "table", "paragraphs", "answer", "scale",
                           "derivation", "answer_source", "table_free"});
  HybridContext ctx;
  ctx.id = get_string(require(j, path, "id"), path + ".id");
  ctx.question = get_string(require(j, path, "question"), path + ".question");
  if (j.contains("table")) ctx.table = Table::from_grid(get_grid(j["table"], path + ".table"));
  if (j.contains("paragraphs")) {
    const json& ps = j["paragraphs"];
    if (!ps.is_array()) throw SchemaError(path + ".paragraphs", "expected a list");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string p = path + ".paragraphs[" + std::to_string(i) + "]";
      if (!ps[i].is_object()) throw SchemaError(p, "expected a paragraph object");
      reject_unknown(ps[i], p, {"id", "text", "rank_score"});
      Paragraph para;
      para.id = ps[i].contains("id") ? static_cast<int>(get_number(ps[i]["id"], p + ".id"))
                                     : static_cast<int>(i);
      para.text = get_string(require(ps[i], p, "text"), p + ".text");
      if (ps[i].contains("rank_score")) {
        para.rank_score = get_number(ps[i]["rank_score"], p + ".rank_score");
      }
      ctx.paragraphs.push_back(std::move(para));
    }
  }
  if (j.contains("answer")) ctx.gold_answer = answer_from_json(j["answer"], path + ".answer");
  if (j.contains("scale")) ctx.gold_scale = get_scale(j["scale"], path + ".scale");
  if (j.contains("derivation")) {
    ctx.derivation = get_string(j["derivation"], path + ".derivation");
  }
  if (j.contains("answer_source")) {
    ctx.answer_source = get_source(j["answer_source"], path + ".answer_source");
  }
  if (j.contains("table_free")) {
    if (!j["table_free"].is_boolean()) throw SchemaError(path + ".table_free", "expected a boolean");
    ctx.table_free = j["table_free"].get<bool>();
  }
  return ctx;
}

std::vector<HybridContext> parse_contexts(const json& j) {
  std::vector<HybridContext> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      out.push_back(context_from_json(j[i], "$[" + std::to_string(i) + "]"));
    }
    return out;
  }
  if (j.is_object() && j.contains("contexts")) {
    reject_unknown(j, "$", {"schema_version", "contexts"});
    if (j.contains("schema_version") && j["schema_version"] != kContextSchemaVersion) {
      throw SchemaError("$.schema_version", "unsupported version");
    }
    const json& cs = j["contexts"];
    if (!cs.is_array()) throw SchemaError("$.contexts", "expected a list");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      out.push_back(context_from_json(cs[i], "$.contexts[" + std::to_string(i) + "]"));
    }
    return out;
  }
  out.push_back(context_from_json(j, "$"));
  return out;
}

std::vector<HybridContext> load_contexts(const std::string& path) {
  return parse_contexts(read_json_file(path));
}

void save_contexts(std::ostream& out, const std::vector<HybridContext>& contexts) {
  Json j;
  j["schema_version"] = kContextSchemaVersion;
  j["contexts"] = Json::array();
  for (const auto& c : contexts) j["contexts"].push_back(context_to_json(c));
  out << j.dump(2) << '\n';
}

std::vector<HybridContext> parse_tatqa(const json& j) {
  std::vector<HybridContext> out;
  if (!j.is_array()) throw SchemaError("$", "expected a list of TAT-QA blocks");
  for (std::size_t b = 0; b < j.size(); ++b) {
    const std::string bp = "$[" + std::to_string(b) + "]";
    const json& block = j[b];
    const json& table_obj = require(block, bp, "table");
    Table table = Table::from_grid(get_grid(require(table_obj, bp + ".table", "table"),
                                            bp + ".table.table"));
    std::vector<Paragraph> paragraphs;
    if (block.contains("paragraphs")) {
      const json& ps = block["paragraphs"];
      for (std::size_t i = 0; i < ps.size(); ++i) {
        const std::string pp = bp + ".paragraphs[" + std::to_string(i) + "]";
        Paragraph p;
        p.id = ps[i].contains("order") ? static_cast<int>(get_number(ps[i]["order"], pp + ".order"))
                                       : static_cast<int>(i + 1);
        p.text = get_string(require(ps[i], pp, "text"), pp + ".text");
        paragraphs.push_back(std::move(p));
      }
    }
    const json& qs = require(block, bp, "questions");
    if (!qs.is_array()) throw SchemaError(bp + ".questions", "expected a list");
    for (std::size_t q = 0; q < qs.size(); ++q) {
      const std::string qp = bp + ".questions[" + std::to_string(q) + "]";
      const json& qj = qs[q];
      HybridContext ctx;
      ctx.id = get_string(require(qj, qp, "uid"), qp + ".uid");
      ctx.question = get_string(require(qj, qp, "question"), qp + ".question");
      ctx.table = table;
      ctx.paragraphs = rank_paragraphs(ctx.question, paragraphs);
      Scale scale = Scale::None;
      if (qj.contains("scale")) scale = get_scale(qj["scale"], qp + ".scale");
      ctx.gold_scale = scale;
      const std::string type = get_string(require(qj, qp, "answer_type"), qp + ".answer_type");
      const json& ans = require(qj, qp, "answer");
      const std::string ap = qp + ".answer";
      if (type == "span" || type == "multi-span") {
        ctx.gold_answer = make_text_answer(get_strings(ans, ap), scale);
      } else if (type == "arithmetic") {
        ctx.gold_answer = make_number_answer(get_number(ans, ap), scale);
      } else if (type == "count") {
        ctx.gold_answer = make_count_answer(static_cast<std::int64_t>(get_number(ans, ap)), scale);
      } else {
        throw SchemaError(qp + ".answer_type", "unknown answer type \"" + type + "\"");
      }
      if (qj.contains("derivation")) {
        std::string d = get_string(qj["derivation"], qp + ".derivation");
        if (!d.empty()) ctx.derivation = std::move(d);
      }
      if (qj.contains("answer_from")) {
        ctx.answer_source = get_source(qj["answer_from"], qp + ".answer_from");
      }
      out.push_back(std::move(ctx));
    }
  }
  return out;
}

std::vector<HybridContext> load_tatqa(const std::string& path) {
  return parse_tatqa(read_json_file(path));
}

std::vector<HybridContext> parse_drop(const json& j) {
  std::vector<HybridContext> out;
  if (!j.is_object()) throw SchemaError("$", "expected an object of passages");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string pp = "$." + it.key();
    const std::string passage = get_string(require(it.value(), pp, "passage"), pp + ".passage");
    const json& qas = require(it.value(), pp, "qa_pairs");
    if (!qas.is_array()) throw SchemaError(pp + ".qa_pairs", "expected a list");
    for (std::size_t q = 0; q < qas.size(); ++q) {
      const std::string qp = pp + ".qa_pairs[" + std::to_string(q) + "]";
      const json& qj = qas[q];
      HybridContext ctx;
      ctx.id = get_string(require(qj, qp, "query_id"), qp + ".query_id");
      ctx.question = get_string(require(qj, qp, "question"), qp + ".question");
      ctx.paragraphs = {Paragraph{0, passage, std::nullopt}};
      ctx.table_free = true;
      ctx.answer_source = AnswerSource::Text;
      ctx.gold_scale = Scale::None;
      const json& ans = require(qj, qp, "answer");
      const std::string ap = qp + ".answer";
      std::string number = ans.contains("number") ? get_string(ans["number"], ap + ".number") : "";
      std::vector<std::string> spans;
      if (ans.contains("spans")) spans = get_strings(ans["spans"], ap + ".spans");
      std::string date;
      if (ans.contains("date")) {
        for (const char* part : {"day", "month", "year"}) {
          if (ans["date"].contains(part)) {
            std::string v = get_string(ans["date"][part], ap + ".date." + part);
            if (!v.empty()) date += (date.empty() ? "" : " ") + v;
          }
        }
      }
      if (!number.empty()) {
        auto v = parse_number(number);
        if (!v) throw SchemaError(ap + ".number", "not a number");
        ctx.gold_answer = make_number_answer(*v, Scale::None);
      } else if (!spans.empty()) {
        ctx.gold_answer = make_text_answer(spans, Scale::None);
      } else if (!date.empty()) {
        ctx.gold_answer = make_text_answer({date}, Scale::None);
      } else {
        throw SchemaError(ap, "empty answer");
      }
      out.push_back(std::move(ctx));
    }
  }
  return out;
}

std::vector<HybridContext> load_drop(const std::string& path) {
  return parse_drop(read_json_file(path));
}

std::vector<HybridContext> load_any(const std::string& path) {
  json j = read_json_file(path);
  if (j.is_array() && !j.empty() && j[0].is_object() && j[0].contains("questions")) {
    return parse_tatqa(j);
  }
  if (j.is_object() && !j.empty() && !j.contains("contexts") && !j.contains("question")) {
    auto first = j.begin();
    if (first.value().is_object() && first.value().contains("passage")) return parse_drop(j);
  }
  return parse_contexts(j);
}

std::vector<Prediction> read_predictions(std::istream& in) {
  std::vector<Prediction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string path = "$[" + std::to_string(lineno - 1) + "]";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(path, e.what());
    }
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    reject_unknown(j, path, {"schema_version", "id", "answer", "error"});
    Prediction p;
    p.id = get_string(require(j, path, "id"), path + ".id");
    if (j.contains("answer") && !j["answer"].is_null()) {
      p.answer = answer_from_json(j["answer"], path + ".answer");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Prediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_predictions(in);
}

void RunConfig::check() const {
  legality.check();
  synthesis.check();
  if (tokenizer != "default") throw ConfigError("unknown tokenizer \"" + tokenizer + "\"");
  if (max_context_length == 0) throw ConfigError("max_context_length must be positive");
  if (workers < 0) throw ConfigError("workers must not be negative");
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  auto fail = [](const std::string& path, const std::string& what) -> ConfigError {
    return ConfigError(path + ": " + what);
  };
  auto integer = [&](const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw fail(path, "expected an integer");
    return v.get<long long>();
  };
  auto check_keys = [&](const json& obj, const std::string& path,
                        std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw fail(path, "expected an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!allowed.count(it.key())) throw fail(path + "." + it.key(), "unknown key");
    }
  };
  check_keys(j, "$", {"mode", "data", "out", "legality", "synthesis", "tokenizer",
                      "max_context_length", "workers"});
  if (j.contains("mode")) {
    if (!j["mode"].is_string()) throw fail("$.mode", "expected a string");
    auto m = parse_synthesis_mode(j["mode"].get<std::string>());
    if (!m) throw fail("$.mode", "unknown mode");
    c.mode = *m;
  }
  if (j.contains("data")) c.data_path = j["data"].get<std::string>();
  if (j.contains("out")) c.out_path = j["out"].get<std::string>();
  if (j.contains("tokenizer")) c.tokenizer = j["tokenizer"].get<std::string>();
  if (j.contains("max_context_length")) {
    c.max_context_length = integer(j["max_context_length"], "$.max_context_length");
  }
  if (j.contains("workers")) c.workers = integer(j["workers"], "$.workers");
  if (j.contains("legality")) {
    const json& l = j["legality"];
    check_keys(l, "$.legality", {"profile", "max_span_length", "max_avg_args",
                                 "max_variadic_args", "max_program_tokens", "disabled_ops"});
    if (l.contains("profile")) {
      const std::string profile = l["profile"].get<std::string>();
      if (profile == "table-free") {
        c.legality = LegalityConfig::table_free_profile(c.legality);
      } else if (profile != "default") {
        throw fail("$.legality.profile", "unknown profile \"" + profile + "\"");
      }
    }
    if (l.contains("max_span_length")) {
      c.legality.max_span_length = integer(l["max_span_length"], "$.legality.max_span_length");
    }
    if (l.contains("max_avg_args")) {
      c.legality.max_avg_args = integer(l["max_avg_args"], "$.legality.max_avg_args");
    }
    if (l.contains("max_variadic_args")) {
      c.legality.max_variadic_args = integer(l["max_variadic_args"], "$.legality.max_variadic_args");
    }
    if (l.contains("max_program_tokens")) {
      c.legality.max_program_tokens =
          integer(l["max_program_tokens"], "$.legality.max_program_tokens");
    }
    if (l.contains("disabled_ops")) {
      for (const auto& name : l["disabled_ops"]) {
        auto op = op_from_name(name.get<std::string>());
        if (!op) throw fail("$.legality.disabled_ops", "unknown operation " + name.dump());
        c.legality.disable(*op);
      }
    }
  }
  if (j.contains("synthesis")) {
    const json& s = j["synthesis"];
    check_keys(s, "$.synthesis", {"numeric_tolerance", "max_occurrences_per_span",
                                  "max_multispan_combinations", "max_arith_numbers",
                                  "per_instance_time_budget_ms", "enable_nested_templates"});
    if (s.contains("numeric_tolerance")) {
      if (!s["numeric_tolerance"].is_number()) throw fail("$.synthesis.numeric_tolerance", "expected a number");
      c.synthesis.numeric_tolerance = s["numeric_tolerance"].get<double>();
    }
    if (s.contains("max_occurrences_per_span")) {
      c.synthesis.max_occurrences_per_span =
          integer(s["max_occurrences_per_span"], "$.synthesis.max_occurrences_per_span");
    }
    if (s.contains("max_multispan_combinations")) {
      c.synthesis.max_multispan_combinations =
          integer(s["max_multispan_combinations"], "$.synthesis.max_multispan_combinations");
    }
    if (s.contains("max_arith_numbers") && !s["max_arith_numbers"].is_null()) {
      c.synthesis.max_arith_numbers =
          integer(s["max_arith_numbers"], "$.synthesis.max_arith_numbers");
    }
    if (s.contains("per_instance_time_budget_ms")) {
      c.synthesis.per_instance_time_budget = std::chrono::milliseconds(
          integer(s["per_instance_time_budget_ms"], "$.synthesis.per_instance_time_budget_ms"));
    }
    if (s.contains("enable_nested_templates")) {
      if (!s["enable_nested_templates"].is_boolean()) {
        throw fail("$.synthesis.enable_nested_templates", "expected a boolean");
      }
      c.synthesis.enable_nested_templates = s["enable_nested_templates"].get<bool>();
    }
  }
  c.check();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    return run_config_from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void apply_env_overrides(RunConfig& c, const EnvLookup& lookup) {
  if (const char* v = lookup("RPG_MODE")) {
    auto m = parse_synthesis_mode(v);
    if (!m) throw ConfigError(std::string("RPG_MODE: unknown mode \"") + v + "\"");
    c.mode = *m;
  }
  if (const char* v = lookup("RPG_WORKERS")) c.workers = env_number<int>("RPG_WORKERS", v);
  if (const char* v = lookup("RPG_MAX_CONTEXT_LENGTH")) {
    c.max_context_length = env_number<std::size_t>("RPG_MAX_CONTEXT_LENGTH", v);
  }
  if (const char* v = lookup("RPG_MAX_PROGRAM_TOKENS")) {
    c.legality.max_program_tokens = env_number<int>("RPG_MAX_PROGRAM_TOKENS", v);
  }
  if (const char* v = lookup("RPG_MAX_SPAN_LENGTH")) {
    c.legality.max_span_length = env_number<int>("RPG_MAX_SPAN_LENGTH", v);
  }
  if (const char* v = lookup("RPG_TIME_BUDGET_MS")) {
    c.synthesis.per_instance_time_budget =
        std::chrono::milliseconds(env_number<long>("RPG_TIME_BUDGET_MS", v));
  }
  if (const char* v = lookup("RPG_NUMERIC_TOLERANCE")) {
    c.synthesis.numeric_tolerance = env_number<double>("RPG_NUMERIC_TOLERANCE", v);
  }
  if (const char* v = lookup("RPG_NESTED_TEMPLATES")) {
    const std::string s = v;
    if (s == "1" || s == "true") {
      c.synthesis.enable_nested_templates = true;
    } else if (s == "0" || s == "false") {
      c.synthesis.enable_nested_templates = false;
    } else {
      throw ConfigError("RPG_NESTED_TEMPLATES: expected 0/1/true/false");
    }
  }
  c.check();
}

void apply_env_overrides(RunConfig& c) {
  apply_env_overrides(c, [](const char* name) { return std::getenv(name); });
}

}  // namespace rpg
