#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabprompt/backend.hpp"
#include "tabprompt/budget.hpp"
#include "tabprompt/config.hpp"
#include "tabprompt/divide_merge.hpp"
#include "tabprompt/metrics.hpp"
#include "tabprompt/segmenter.hpp"
#include "tabprompt/serializer.hpp"
#include "tabprompt/templates.hpp"
#include "tabprompt/tokenizer.hpp"

namespace tabprompt {

/// Segment, select, render and fit one instance's prompt.
class PromptBuilder {
 public:
  PromptBuilder(BudgetPlan plan, std::string prologue, Layout layout, TemplateRegistry registry,
                EntitySampling sampling,
                const Tokenizer& tok = ReferenceTokenizer::instance());

  /// Subtable and demonstrated row chosen for an instance.
  struct Context {
    Subtable subtable;
    std::optional<std::size_t> demo_row;
    std::optional<std::string> warning;
  };

  struct Built {
    PromptRecord record;
    std::size_t tokens = 0;
    /// Rows dropped from the end of the subtable by the fit guard.
    std::size_t trimmed_rows = 0;
  };

  /// Segments the table under allowed - offset, so the overlap fits the
  /// allowed length, and picks the subtable. Throws DataError when the table
  /// cannot be segmented.
  Context prepare(const TaskInstance& instance, const Table& table) const;

  /// Renders and assembles with `options` as the candidate list. Rows are
  /// dropped from the end of the subtable until the prompt fits
  /// model_limit; throws DataError when even the table-less prompt is too long.
  Built build(const TaskInstance& instance, const Table& table, const Context& ctx,
              std::span<const std::string> options) const;

  /// Nominal segment budget for a task.
  std::size_t segment_budget(Task task) const;

  const BudgetPlan& plan() const noexcept { return plan_; }
  const Tokenizer& tokenizer() const noexcept { return tok_; }
  const std::string& prologue() const noexcept { return prologue_; }
  Layout layout() const noexcept { return layout_; }
  const TemplateRegistry& registry() const noexcept { return registry_; }

 private:
  BudgetPlan plan_;
  std::string prologue_;
  Layout layout_;
  TemplateRegistry registry_;
  EntitySampling sampling_;
  const Tokenizer& tok_;
};

/// Hands out the oracle that answers for one instance. Mock oracles are
/// created per instance so each knows only that instance's gold; an HTTP
/// (or injected) backend is shared.
class OracleProvider {
 public:
  /// Mock or HTTP backend as configured.
  static OracleProvider from_config(const PipelineConfig& cfg);
  /// Every instance is answered by `shared`.
  explicit OracleProvider(std::shared_ptr<OracleBackend> shared, bool needs_prompt_text = true);

  /// Gold labels double as the mock's relevance order: the first gold item
  /// scores highest, non-gold candidates score 0.
  std::shared_ptr<OracleBackend> oracle(const std::string& instance_id,
                                        std::span<const std::string> gold,
                                        std::span<const std::string> candidates) const;

  /// False for mocks, which answer from hints and never read prompt text.
  bool needs_prompt_text() const noexcept { return needs_text_; }

 private:
  OracleProvider() = default;
  std::shared_ptr<OracleBackend> shared_;
  bool needs_text_ = true;
  double noise_ = 0.0;
  bool always_nota_ = false;
  std::uint64_t seed_ = 0;
};

/// Tables, instances and label spaces for one run, validated together.
class Pipeline {
 public:
  /// Loads everything named in `cfg`. Throws DataError on missing files,
  /// unknown tables, invalid instances or missing label spaces.
  explicit Pipeline(PipelineConfig cfg, const Tokenizer& tok = ReferenceTokenizer::instance());
  Pipeline(PipelineConfig cfg, std::vector<Table> tables, std::vector<TaskInstance> instances,
           std::map<Task, LabelSpace> label_spaces,
           const Tokenizer& tok = ReferenceTokenizer::instance());

  const PipelineConfig& config() const noexcept { return cfg_; }
  const std::vector<Table>& tables() const noexcept { return tables_; }
  const std::vector<TaskInstance>& instances() const noexcept { return instances_; }
  const Table& table_of(const TaskInstance& instance) const;
  const Table* find_table(std::string_view id) const;
  std::optional<std::size_t> find_instance(std::string_view id) const;
  /// Per-instance candidates when given, else the task's label file.
  const LabelSpace& label_space(std::size_t instance_index) const;
  const PromptBuilder& builder() const noexcept { return *builder_; }
  /// Load warnings (padded rows and the like).
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  void index_and_validate(std::map<Task, LabelSpace> label_spaces);

  PipelineConfig cfg_;
  std::vector<Table> tables_;
  std::vector<TaskInstance> instances_;
  std::map<std::string, std::size_t, std::less<>> table_index_;
  std::map<std::string, std::size_t, std::less<>> instance_index_;
  std::map<Task, LabelSpace> task_spaces_;
  std::vector<std::optional<LabelSpace>> own_spaces_;
  std::unique_ptr<PromptBuilder> builder_;
  std::vector<std::string> warnings_;
};

/// Training prompts for instance `index`: Pos/Neg records for classification,
/// one record per gold-bearing shuffled chunk for ranking, one record
/// otherwise. Deterministic in (seed, index).
std::vector<PromptBuilder::Built> expand_instance(const Pipeline& pipeline, std::size_t index);

struct BuildOutput {
  std::vector<PromptRecord> records;
  std::vector<std::string> warnings;
  std::size_t max_tokens = 0;
};

/// Every instance expanded in input order. Instances that cannot be built
/// are collected and reported in one DataError listing their table ids.
BuildOutput cmd_build(const Pipeline& pipeline);

/// {"instruction","input","question","response"} per line.
void write_prompt_records(std::ostream& out, std::span<const PromptRecord> records);

/// Segments every table under `allowed` / `offset`.
std::vector<Subtable> cmd_segment(std::span<const Table> tables, std::size_t allowed,
                                  std::size_t offset,
                                  const Tokenizer& tok = ReferenceTokenizer::instance());
void write_subtables(std::ostream& out, std::span<const Subtable> subtables);

struct Prediction {
  std::string instance_id;
  Task task = Task::ColumnTypeAnnotation;
  /// Classification labels, or the ranking for ranking tasks.
  std::vector<std::string> labels;
  /// Free-text answer for QA and fact verification.
  std::string answer;
  std::size_t oracle_calls = 0;
};

/// Divide-and-merge over every classification instance (others are skipped).
std::vector<Prediction> cmd_classify(const Pipeline& pipeline, const OracleProvider& oracles);
void write_classifications(std::ostream& out, std::span<const Prediction> predictions);

struct RankRequest {
  std::string instance_id;
  std::vector<std::string> candidates;
  /// Optional relevance order for mock backends.
  std::vector<std::string> gold;
};

/// {"instance_id","candidates":[...],"gold"?:[...]} per line.
std::vector<RankRequest> load_rank_requests(std::istream& in);

/// Tree rank for each request. When `context` knows the instance id, its
/// table-aware prompts are used for text backends; otherwise a generic
/// ranking prompt is.
std::vector<Prediction> cmd_rank(std::span<const RankRequest> requests, const PipelineConfig& cfg,
                                 const OracleProvider& oracles, const Pipeline* context = nullptr);
void write_rankings(std::ostream& out, std::span<const Prediction> predictions);

/// Predictions keyed by instance id, read from JSONL lines carrying
/// "instance_id" and one of "predicted", "ranking" or "answer".
std::map<std::string, Prediction> load_predictions(std::istream& in);

/// Runs the backend over every instance.
std::vector<Prediction> predict_all(const Pipeline& pipeline, const OracleProvider& oracles);

/// Scores predictions against gold: micro P/R/F1 for column type and
/// relation extraction, accuracy for entity linking, QA and fact
/// verification, MAP for row population and schema augmentation.
/// Instances without a prediction score as empty answers and are counted
/// under warnings["missing_prediction"].
EvalReport cmd_eval(const Pipeline& pipeline, const std::map<std::string, Prediction>& predictions);

/// Human-readable dump of one assembled training prompt.
std::string cmd_inspect(const Pipeline& pipeline, const std::string& instance_id,
                        std::size_t record = 0);

}  // namespace tabprompt
