// tabprompt: build instruction-tuning prompts from tables, run divide-and-merge
// classification and tree rank against a backend, and score the results.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tabprompt/config.hpp"
#include "tabprompt/error.hpp"
#include "tabprompt/pipeline.hpp"

using namespace tabprompt;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> tables, instances, output, templates_dir;
  std::vector<std::string> labels;  // task=path
  std::optional<std::string> backend, url, layout, prologue;
  std::optional<double> noise;
  std::optional<std::size_t> model_limit, offset, workers, subset_size, rank_subset, top_k;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("-c,--config", f.config, "JSON config file");
  cmd->add_option("--seed", f.seed, "Run seed (required unless set in the config)");
  cmd->add_option("--tables", f.tables, "Table JSONL");
  cmd->add_option("--instances", f.instances, "Instance JSONL");
  cmd->add_option("-o,--output", f.output, "Output file (default: stdout)");
  cmd->add_option("--labels", f.labels, "Label file per task, as task=path")->take_all();
  cmd->add_option("--templates", f.templates_dir, "Directory of template overrides");
  cmd->add_option("--backend", f.backend, "mock or http")
      ->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--url", f.url, "HTTP completion endpoint");
  cmd->add_option("--noise", f.noise, "Mock swap-noise probability")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--layout", f.layout, "instruction-first or input-first")
      ->check(CLI::IsMember({"instruction-first", "input-first"}));
  cmd->add_option("--prologue", f.prologue, "alpaca, vicuna or literal text");
  cmd->add_option("--model-limit", f.model_limit, "Context window in tokens");
  cmd->add_option("--offset", f.offset, "Overlap tokens between subtables");
  cmd->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--subset-size", f.subset_size, "Labels per divide-and-merge subset");
  cmd->add_option("--rank-subset", f.rank_subset, "Tree-rank node size S");
  cmd->add_option("--top-k", f.top_k, "Truncate rankings to k items");
}

PipelineConfig resolve(const Flags& f) {
  PipelineConfig cfg = f.config.empty() ? PipelineConfig{} : load_config(f.config);
  if (f.seed) cfg.seed = f.seed;
  if (f.tables) cfg.tables_path = *f.tables;
  if (f.instances) cfg.instances_path = *f.instances;
  if (f.output) cfg.output_path = *f.output;
  if (f.templates_dir) cfg.templates_dir = *f.templates_dir;
  for (const auto& spec : f.labels) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) throw DataError("--labels expects task=path, got '" + spec + "'");
    auto task = parse_task(spec.substr(0, eq));
    if (!task) throw DataError("unknown task '" + spec.substr(0, eq) + "'");
    cfg.label_paths[*task] = spec.substr(eq + 1);
  }
  if (f.backend) cfg.backend = *f.backend == "http" ? BackendKind::Http : BackendKind::Mock;
  if (f.url) cfg.http.url = *f.url;
  if (f.noise) cfg.mock_noise = *f.noise;
  if (f.layout)
    cfg.layout = *f.layout == "input-first" ? Layout::InputFirst : Layout::InstructionFirst;
  if (f.prologue) cfg.prologue = prologue_from_name(*f.prologue);
  if (f.model_limit) cfg.budget.model_limit = *f.model_limit;
  if (f.offset) cfg.budget.offset = *f.offset;
  if (f.workers) cfg.workers = *f.workers;
  if (f.subset_size) cfg.classify.subset_size = *f.subset_size;
  if (f.rank_subset) cfg.rank.subset_size = *f.rank_subset;
  if (f.top_k) cfg.rank.top_k = *f.top_k;
  return cfg;
}

/// Writes through `fn` to the configured output path or stdout.
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  fn(out);
  if (!out) throw DataError("failed writing '" + path + "'");
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

void print_warnings(const std::vector<std::string>& warnings, bool verbose) {
  if (warnings.empty()) return;
  if (!verbose) {
    std::cerr << warnings.size() << " warning(s); rerun with --verbose to list them\n";
    return;
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Table prompt builder, classifier, ranker and evaluator"};
  app.require_subcommand(1);
  Flags flags;
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "List every warning");

  auto* build = app.add_subcommand("build", "Emit instruction-tuning JSONL");
  add_common(build, flags);

  auto* segment = app.add_subcommand("segment", "Split tables into overlapping subtables");
  add_common(segment, flags);
  std::string segment_task = "column-type-annotation";
  std::optional<std::size_t> segment_allowed;
  segment->add_option("--task", segment_task, "Task whose budget sets the allowed length");
  segment->add_option("--allowed", segment_allowed, "Allowed subtable tokens (overrides --task)");

  auto* classify = app.add_subcommand("classify", "Divide-and-merge predictions");
  add_common(classify, flags);

  auto* rank = app.add_subcommand("rank", "Tree-rank candidate lists");
  add_common(rank, flags);
  std::string rank_input;
  rank->add_option("-i,--input", rank_input, "Rank requests JSONL")->required();

  auto* eval = app.add_subcommand("eval", "Score predictions against gold");
  add_common(eval, flags);
  std::string predictions_path, report_path;
  eval->add_option("--predictions", predictions_path,
                   "Predictions JSONL (default: run the backend)");
  eval->add_option("--report", report_path, "Write the report JSON here");

  auto* inspect = app.add_subcommand("inspect", "Print one assembled prompt");
  add_common(inspect, flags);
  std::string inspect_id;
  std::size_t inspect_record = 0;
  inspect->add_option("--id", inspect_id, "Instance id (default: first instance)");
  inspect->add_option("--record", inspect_record, "Record index within the instance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    PipelineConfig cfg = resolve(flags);

    if (*build) {
      Pipeline pipeline(cfg);
      auto out = cmd_build(pipeline);
      emit(cfg.output_path, [&](std::ostream& os) { write_prompt_records(os, out.records); });
      print_warnings(out.warnings, verbose);
      std::cerr << out.records.size() << " record(s) from " << pipeline.instances().size()
                << " instance(s); longest prompt " << out.max_tokens << " tokens\n";
    } else if (*segment) {
      if (cfg.tables_path.empty()) throw DataError("segment needs --tables");
      auto corpus = load_tables_file(cfg.tables_path);
      std::size_t allowed = 0;
      if (segment_allowed) {
        allowed = *segment_allowed;
      } else {
        auto task = parse_task(segment_task);
        if (!task) throw DataError("unknown task '" + segment_task + "'");
        allowed = allowed_subtable_len(cfg.resolved_budget(ReferenceTokenizer::instance()), *task);
      }
      auto subs = cmd_segment(corpus.tables, allowed, cfg.budget.offset);
      emit(cfg.output_path, [&](std::ostream& os) { write_subtables(os, subs); });
      print_warnings(corpus.warnings, verbose);
    } else if (*classify) {
      Pipeline pipeline(cfg);
      auto preds = cmd_classify(pipeline, OracleProvider::from_config(cfg));
      emit(cfg.output_path, [&](std::ostream& os) { write_classifications(os, preds); });
    } else if (*rank) {
      auto in = open_input(rank_input);
      auto requests = load_rank_requests(in);
      std::optional<Pipeline> context;
      if (!cfg.tables_path.empty() && !cfg.instances_path.empty()) context.emplace(cfg);
      auto preds = cmd_rank(requests, cfg, OracleProvider::from_config(cfg),
                            context ? &*context : nullptr);
      emit(cfg.output_path, [&](std::ostream& os) { write_rankings(os, preds); });
    } else if (*eval) {
      Pipeline pipeline(cfg);
      if (predictions_path.empty()) predictions_path = cfg.predictions_path;
      if (report_path.empty()) report_path = cfg.report_path;
      std::map<std::string, Prediction> preds;
      if (!predictions_path.empty()) {
        auto in = open_input(predictions_path);
        preds = load_predictions(in);
      } else {
        for (auto& p : predict_all(pipeline, OracleProvider::from_config(cfg)))
          preds.emplace(p.instance_id, std::move(p));
      }
      auto report = cmd_eval(pipeline, preds);
      if (!report_path.empty())
        emit(report_path, [&](std::ostream& os) { os << report_to_json(report) << '\n'; });
      emit(cfg.output_path, [&](std::ostream& os) { os << report_to_text(report); });
    } else if (*inspect) {
      Pipeline pipeline(cfg);
      std::cout << cmd_inspect(pipeline, inspect_id, inspect_record);
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
