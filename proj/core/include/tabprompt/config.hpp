#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "tabprompt/budget.hpp"
#include "tabprompt/divide_merge.hpp"
#include "tabprompt/http_backend.hpp"
#include "tabprompt/serializer.hpp"
#include "tabprompt/tree_rank.hpp"

namespace tabprompt {

enum class BackendKind { Mock, Http };

/// Everything a pipeline run needs. Loaded from a JSON file whose keys
/// mirror the members below; command-line flags override file values.
///
/// {
///   "seed": 7,
///   "tables": "tables.jsonl", "instances": "instances.jsonl",
///   "labels": {"column-type-annotation": "types.txt"},
///   "output": "out.jsonl", "predictions": "pred.jsonl", "report": "report.json",
///   "budget": {"model_limit": 2048, "metadata_reserve": 20, "offset": 200,
///              "instruction_reserve": {"entity-linking": 500}},
///   "classify": {"subset_size": 10, "pos_neg_ratio": [1, 3], "runoff_rounds": 3},
///   "rank": {"subset_size": 20, "top_k": 10},
///   "prologue": "alpaca" | "vicuna" | {"custom": "..."},
///   "layout": "instruction-first" | "input-first",
///   "entity_sampling": "first-row" | "seeded",
///   "backend": {"kind": "mock", "noise": 0.0, "mode": "echo-gold"}
///            | {"kind": "http", "url": "...", "timeout_s": 60, "max_in_flight": 8,
///               "openai_compatible": false, "model": ""},
///   "templates_dir": "templates/",
///   "workers": 1
/// }
struct PipelineConfig {
  std::optional<std::uint64_t> seed;

  std::string tables_path;
  std::string instances_path;
  std::map<Task, std::string> label_paths;
  std::string output_path;
  std::string predictions_path;
  std::string report_path;
  std::string templates_dir;

  /// prologue_reserve is recomputed from the prologue by resolved_budget().
  BudgetPlan budget = BudgetPlan::defaults();
  ClassifyConfig classify;
  RankConfig rank;

  std::string prologue{kAlpacaPrologue};
  Layout layout = Layout::InstructionFirst;
  EntitySampling::Mode entity_sampling = EntitySampling::Mode::FirstRow;

  BackendKind backend = BackendKind::Mock;
  double mock_noise = 0.0;
  bool mock_always_nota = false;
  HttpBackendConfig http = HttpBackendConfig::from_env();

  std::size_t workers = 1;

  /// The run seed; throws DataError when neither file nor flag supplied one.
  std::uint64_t require_seed() const;

  /// Budget with the prologue reservation measured for `tok`.
  BudgetPlan resolved_budget(const Tokenizer& tok) const;
};

/// Parses config JSON text. Unknown keys are rejected. Throws DataError.
PipelineConfig parse_config(const std::string& json_text);
/// Relative paths inside the file resolve against the file's directory.
PipelineConfig load_config(const std::string& path);

/// Resolves "alpaca", "vicuna" or returns the text unchanged.
std::string prologue_from_name(const std::string& name_or_text);

}  // namespace tabprompt
