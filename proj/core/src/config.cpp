#include "tabprompt/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tabprompt/error.hpp"

namespace tabprompt {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const char* where) {
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw DataError(std::string("unknown config key '") + key + "' in " + where);
}

template <class T>
T get_as(const json& obj, const char* key, const char* where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(std::string("config ") + where + "." + key + ": " + e.what());
  }
}

Task task_key(const std::string& name) {
  auto task = parse_task(name);
  if (!task) throw DataError("unknown task '" + name + "' in config");
  return *task;
}

void parse_budget(const json& b, BudgetPlan& plan) {
  reject_unknown(b, {"model_limit", "metadata_reserve", "offset", "instruction_reserve"}, "budget");
  if (b.contains("model_limit")) plan.model_limit = get_as<std::size_t>(b, "model_limit", "budget");
  if (b.contains("metadata_reserve"))
    plan.metadata_reserve = get_as<std::size_t>(b, "metadata_reserve", "budget");
  if (b.contains("offset")) plan.offset = get_as<std::size_t>(b, "offset", "budget");
  if (b.contains("instruction_reserve")) {
    for (const auto& [name, value] : b.at("instruction_reserve").items())
      plan.instruction_reserve[task_key(name)] = value.get<std::size_t>();
  }
}

void parse_backend(const json& b, PipelineConfig& cfg) {
  const auto kind = get_as<std::string>(b, "kind", "backend");
  if (kind == "mock") {
    reject_unknown(b, {"kind", "noise", "mode"}, "backend");
    cfg.backend = BackendKind::Mock;
    if (b.contains("noise")) cfg.mock_noise = get_as<double>(b, "noise", "backend");
    if (cfg.mock_noise < 0.0 || cfg.mock_noise > 1.0)
      throw DataError("backend.noise must lie in [0, 1]");
    if (b.contains("mode")) {
      auto mode = get_as<std::string>(b, "mode", "backend");
      if (mode != "echo-gold" && mode != "always-nota")
        throw DataError("backend.mode must be echo-gold or always-nota");
      cfg.mock_always_nota = mode == "always-nota";
    }
  } else if (kind == "http") {
    reject_unknown(b, {"kind", "url", "timeout_s", "max_in_flight", "openai_compatible", "model",
                       "max_attempts"},
                   "backend");
    cfg.backend = BackendKind::Http;
    if (b.contains("url")) cfg.http.url = get_as<std::string>(b, "url", "backend");
    if (b.contains("timeout_s")) cfg.http.timeout_seconds = get_as<double>(b, "timeout_s", "backend");
    if (b.contains("max_in_flight"))
      cfg.http.max_in_flight = get_as<std::size_t>(b, "max_in_flight", "backend");
    if (b.contains("max_attempts")) cfg.http.max_attempts = get_as<int>(b, "max_attempts", "backend");
    if (b.contains("openai_compatible"))
      cfg.http.openai_compatible = get_as<bool>(b, "openai_compatible", "backend");
    if (b.contains("model")) cfg.http.model = get_as<std::string>(b, "model", "backend");
  } else {
    throw DataError("backend.kind must be 'mock' or 'http'");
  }
}

}  // namespace

std::uint64_t PipelineConfig::require_seed() const {
  if (!seed) throw DataError("a seed is required (config \"seed\" or --seed)");
  return *seed;
}

BudgetPlan PipelineConfig::resolved_budget(const Tokenizer& tok) const {
  BudgetPlan plan = budget;
  plan.prologue_reserve = measure_prologue_reserve(prologue, tok);
  plan.validate();
  return plan;
}

std::string prologue_from_name(const std::string& name_or_text) {
  if (name_or_text == "alpaca") return std::string(kAlpacaPrologue);
  if (name_or_text == "vicuna") return std::string(kVicunaPrologue);
  return name_or_text;
}

PipelineConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("config must be a JSON object");
  reject_unknown(doc,
                 {"seed", "tables", "instances", "labels", "output", "predictions", "report",
                  "budget", "classify", "rank", "prologue", "layout", "entity_sampling", "backend",
                  "templates_dir", "workers"},
                 "config");

  PipelineConfig cfg;
  if (doc.contains("seed")) cfg.seed = get_as<std::uint64_t>(doc, "seed", "config");
  if (doc.contains("tables")) cfg.tables_path = get_as<std::string>(doc, "tables", "config");
  if (doc.contains("instances")) cfg.instances_path = get_as<std::string>(doc, "instances", "config");
  if (doc.contains("output")) cfg.output_path = get_as<std::string>(doc, "output", "config");
  if (doc.contains("predictions"))
    cfg.predictions_path = get_as<std::string>(doc, "predictions", "config");
  if (doc.contains("report")) cfg.report_path = get_as<std::string>(doc, "report", "config");
  if (doc.contains("templates_dir"))
    cfg.templates_dir = get_as<std::string>(doc, "templates_dir", "config");
  if (doc.contains("workers")) cfg.workers = std::max<std::size_t>(1, get_as<std::size_t>(doc, "workers", "config"));
  if (doc.contains("labels"))
    for (const auto& [name, path] : doc.at("labels").items())
      cfg.label_paths[task_key(name)] = path.get<std::string>();

  if (doc.contains("budget")) parse_budget(doc.at("budget"), cfg.budget);

  if (doc.contains("classify")) {
    const auto& c = doc.at("classify");
    reject_unknown(c, {"subset_size", "pos_neg_ratio", "runoff_rounds", "max_in_flight"}, "classify");
    if (c.contains("subset_size")) cfg.classify.subset_size = get_as<std::size_t>(c, "subset_size", "classify");
    if (c.contains("runoff_rounds"))
      cfg.classify.runoff_rounds = get_as<std::size_t>(c, "runoff_rounds", "classify");
    if (c.contains("max_in_flight"))
      cfg.classify.max_in_flight = get_as<std::size_t>(c, "max_in_flight", "classify");
    if (c.contains("pos_neg_ratio")) {
      auto ratio = get_as<std::vector<std::size_t>>(c, "pos_neg_ratio", "classify");
      if (ratio.size() != 2) throw DataError("classify.pos_neg_ratio must be [pos, neg]");
      cfg.classify.pos_ratio = ratio[0];
      cfg.classify.neg_ratio = ratio[1];
    }
  }
  if (doc.contains("rank")) {
    const auto& r = doc.at("rank");
    reject_unknown(r, {"subset_size", "top_k", "max_in_flight"}, "rank");
    if (r.contains("subset_size")) cfg.rank.subset_size = get_as<std::size_t>(r, "subset_size", "rank");
    if (r.contains("top_k")) cfg.rank.top_k = get_as<std::size_t>(r, "top_k", "rank");
    if (r.contains("max_in_flight"))
      cfg.rank.max_in_flight = get_as<std::size_t>(r, "max_in_flight", "rank");
  }
  if (doc.contains("prologue")) {
    const auto& p = doc.at("prologue");
    if (p.is_string()) {
      auto name = p.get<std::string>();
      if (name != "alpaca" && name != "vicuna")
        throw DataError("prologue must be alpaca, vicuna or {\"custom\": text}");
      cfg.prologue = prologue_from_name(name);
    } else if (p.is_object() && p.contains("custom") && p.at("custom").is_string()) {
      cfg.prologue = p.at("custom").get<std::string>();
    } else {
      throw DataError("prologue must be alpaca, vicuna or {\"custom\": text}");
    }
  }
  if (doc.contains("layout")) {
    auto layout = get_as<std::string>(doc, "layout", "config");
    if (layout == "instruction-first") cfg.layout = Layout::InstructionFirst;
    else if (layout == "input-first") cfg.layout = Layout::InputFirst;
    else throw DataError("layout must be instruction-first or input-first");
  }
  if (doc.contains("entity_sampling")) {
    auto mode = get_as<std::string>(doc, "entity_sampling", "config");
    if (mode == "first-row") cfg.entity_sampling = EntitySampling::Mode::FirstRow;
    else if (mode == "seeded") cfg.entity_sampling = EntitySampling::Mode::Seeded;
    else throw DataError("entity_sampling must be first-row or seeded");
  }
  if (doc.contains("backend")) parse_backend(doc.at("backend"), cfg);
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  PipelineConfig cfg = parse_config(buf.str());

  const auto base = std::filesystem::path(path).parent_path();
  auto anchor = [&base](std::string& p) {
    if (!p.empty() && p != "-" && std::filesystem::path(p).is_relative())
      p = (base / p).lexically_normal().string();
  };
  anchor(cfg.tables_path);
  anchor(cfg.instances_path);
  anchor(cfg.output_path);
  anchor(cfg.predictions_path);
  anchor(cfg.report_path);
  anchor(cfg.templates_dir);
  for (auto& [task, p] : cfg.label_paths) anchor(p);
  return cfg;
}

}  // namespace tabprompt
