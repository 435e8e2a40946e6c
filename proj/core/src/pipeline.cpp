#include "tabprompt/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json_util.hpp"
#include "tabprompt/error.hpp"
#include "tabprompt/http_backend.hpp"
#include "tabprompt/mock_oracle.hpp"
#include "tabprompt/random.hpp"
#include "tabprompt/tree_rank.hpp"

namespace tabprompt {
namespace {

using detail::json;

/// Calls fn(i) for i in [0, n) on up to `workers` threads. Exceptions are
/// rethrown after all workers finish, lowest index first.
template <class Fn>
void run_indexed(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::min(std::max<std::size_t>(workers, 1), std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string join(std::span<const std::string> items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string bracket_list(std::span<const std::string> items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += '<' + items[i] + '>';
  }
  return out;
}

std::string generic_rank_prompt(const PipelineConfig& cfg, std::span<const std::string> items) {
  return assemble_prompt(cfg.prologue,
                         "This is a candidate ranking task. Order the candidates from the most "
                         "relevant to the least relevant and list every candidate exactly once.",
                         "", "The candidates are: " + bracket_list(items) + ".", cfg.layout);
}

std::string list_errors(const std::vector<std::string>& errors, std::size_t cap = 20) {
  std::string out;
  for (std::size_t i = 0; i < errors.size() && i < cap; ++i) out += "\n  " + errors[i];
  if (errors.size() > cap)
    out += "\n  ... and " + std::to_string(errors.size() - cap) + " more";
  return out;
}

std::uint64_t seed_of(const Pipeline& p) { return p.config().require_seed(); }

RankConfig rank_config_for(const PipelineConfig& cfg, const std::string& instance_id) {
  RankConfig rc = cfg.rank;
  rc.seed = derive_seed(cfg.require_seed(), fnv1a64(instance_id));
  return rc;
}

}  // namespace

// ---------------------------------------------------------------- builder

PromptBuilder::PromptBuilder(BudgetPlan plan, std::string prologue, Layout layout,
                             TemplateRegistry registry, EntitySampling sampling,
                             const Tokenizer& tok)
    : plan_(std::move(plan)),
      prologue_(std::move(prologue)),
      layout_(layout),
      registry_(std::move(registry)),
      sampling_(sampling),
      tok_(tok) {
  plan_.validate();
}

std::size_t PromptBuilder::segment_budget(Task task) const {
  const std::size_t allowed = allowed_subtable_len(plan_, task);
  if (allowed <= plan_.offset)
    throw DataError("budget for " + std::string(task_name(task)) + " leaves " +
                    std::to_string(allowed) + " table tokens, not more than the offset " +
                    std::to_string(plan_.offset));
  return allowed - plan_.offset;
}

PromptBuilder::Context PromptBuilder::prepare(const TaskInstance& instance,
                                              const Table& table) const {
  if (is_ranking(instance.task)) return Context{Subtable{table.id, 0, 0, 0}, {}, {}};
  auto subtables = segment_table(table, segment_budget(instance.task), plan_.offset, tok_);
  auto demo = demonstration_row(instance, table, sampling_);
  auto selection = select_subtable(instance, table, subtables, demo);
  return Context{std::move(selection.subtable), demo, std::move(selection.warning)};
}

PromptBuilder::Built PromptBuilder::build(const TaskInstance& instance, const Table& table,
                                          const Context& ctx,
                                          std::span<const std::string> options) const {
  const TaskText text = render_instruction(instance, table, options, registry_, ctx.demo_row);
  const bool include_table = !is_ranking(instance.task);
  const std::size_t start = std::min(ctx.subtable.start_row, table.row_count());
  std::size_t end = std::clamp(ctx.subtable.end_row, start, table.row_count());

  Built out;
  while (true) {
    std::string input = render_input(table, start, end, include_table, text.input_suffix);
    std::string assembled =
        assemble_prompt(prologue_, text.instruction, input, text.question, layout_);
    const std::size_t tokens = tok_.count(assembled);
    if (tokens <= plan_.model_limit) {
      out.record = PromptRecord{text.instruction, std::move(input), text.question, {},
                                std::move(assembled)};
      out.tokens = tokens;
      return out;
    }
    if (!include_table || end == start)
      throw DataError("instance '" + instance.id + "' (table '" + table.id + "'): prompt needs " +
                      std::to_string(tokens) + " tokens without table rows, limit " +
                      std::to_string(plan_.model_limit));
    // Drop trailing rows worth at least the overflow, then re-measure.
    const std::size_t overflow = tokens - plan_.model_limit;
    std::size_t dropped = 0;
    do {
      --end;
      ++out.trimmed_rows;
      dropped += tok_.count(serialize_row_fragment(table.rows[end], end));
    } while (end > start && dropped < overflow);
  }
}

// ---------------------------------------------------------------- oracles

OracleProvider OracleProvider::from_config(const PipelineConfig& cfg) {
  OracleProvider p;
  if (cfg.backend == BackendKind::Http) {
    if (cfg.http.url.empty())
      throw DataError("http backend needs backend.url or TABPROMPT_ENDPOINT");
    p.shared_ = std::make_shared<HttpBackend>(cfg.http);
    p.needs_text_ = true;
  } else {
    p.needs_text_ = false;
    p.noise_ = cfg.mock_noise;
    p.always_nota_ = cfg.mock_always_nota;
    p.seed_ = cfg.seed.value_or(0);
  }
  return p;
}

OracleProvider::OracleProvider(std::shared_ptr<OracleBackend> shared, bool needs_prompt_text)
    : shared_(std::move(shared)), needs_text_(needs_prompt_text) {
  if (!shared_) throw std::invalid_argument("OracleProvider: null backend");
}

std::shared_ptr<OracleBackend> OracleProvider::oracle(
    const std::string& instance_id, std::span<const std::string> gold,
    std::span<const std::string> candidates) const {
  if (shared_) return shared_;
  MockOracle::Options opts;
  opts.gold[instance_id] = std::vector<std::string>(gold.begin(), gold.end());
  for (const auto& c : candidates) opts.relevance.emplace(c, 0.0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto score = static_cast<double>(gold.size() - i);
    auto [it, inserted] = opts.relevance.emplace(gold[i], score);
    if (!inserted && it->second == 0.0) it->second = score;
  }
  opts.noise = noise_;
  opts.seed = derive_seed(seed_, fnv1a64(instance_id));
  opts.mode = always_nota_ ? MockOracle::Mode::AlwaysNota : MockOracle::Mode::EchoGold;
  return std::make_shared<MockOracle>(std::move(opts));
}

// ---------------------------------------------------------------- pipeline

Pipeline::Pipeline(PipelineConfig cfg, const Tokenizer& tok) : cfg_(std::move(cfg)) {
  if (cfg_.tables_path.empty()) throw DataError("no tables file given");
  if (cfg_.instances_path.empty()) throw DataError("no instances file given");
  auto corpus = load_tables_file(cfg_.tables_path);
  tables_ = std::move(corpus.tables);
  warnings_ = std::move(corpus.warnings);
  instances_ = load_instances_file(cfg_.instances_path);
  std::map<Task, LabelSpace> spaces;
  for (const auto& [task, path] : cfg_.label_paths) spaces.emplace(task, load_label_space(path));

  TemplateRegistry registry = cfg_.templates_dir.empty()
                                  ? TemplateRegistry::builtin()
                                  : TemplateRegistry::with_overrides(cfg_.templates_dir);
  builder_ = std::make_unique<PromptBuilder>(
      cfg_.resolved_budget(tok), cfg_.prologue, cfg_.layout, std::move(registry),
      EntitySampling{cfg_.entity_sampling, cfg_.seed.value_or(0)}, tok);
  index_and_validate(std::move(spaces));
}

Pipeline::Pipeline(PipelineConfig cfg, std::vector<Table> tables,
                   std::vector<TaskInstance> instances, std::map<Task, LabelSpace> label_spaces,
                   const Tokenizer& tok)
    : cfg_(std::move(cfg)), tables_(std::move(tables)), instances_(std::move(instances)) {
  TemplateRegistry registry = cfg_.templates_dir.empty()
                                  ? TemplateRegistry::builtin()
                                  : TemplateRegistry::with_overrides(cfg_.templates_dir);
  builder_ = std::make_unique<PromptBuilder>(
      cfg_.resolved_budget(tok), cfg_.prologue, cfg_.layout, std::move(registry),
      EntitySampling{cfg_.entity_sampling, cfg_.seed.value_or(0)}, tok);
  index_and_validate(std::move(label_spaces));
}

void Pipeline::index_and_validate(std::map<Task, LabelSpace> label_spaces) {
  task_spaces_ = std::move(label_spaces);
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    check_table(tables_[i]);
    if (!table_index_.emplace(tables_[i].id, i).second)
      throw DataError("duplicate table id '" + tables_[i].id + "'");
  }

  std::vector<std::string> errors;
  own_spaces_.assign(instances_.size(), std::nullopt);
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const auto& inst = instances_[i];
    if (!instance_index_.emplace(inst.id, i).second) {
      errors.push_back("duplicate instance id '" + inst.id + "'");
      continue;
    }
    const Table* table = find_table(inst.table_id);
    if (!table) {
      errors.push_back("instance '" + inst.id + "': unknown table '" + inst.table_id + "'");
      continue;
    }
    for (auto& problem : validate_instance(inst, *table))
      errors.push_back("instance '" + inst.id + "': " + problem);
    if (!is_classification(inst.task)) continue;
    if (!inst.candidates.empty()) {
      try {
        own_spaces_[i].emplace(inst.candidates);
      } catch (const DataError& e) {
        errors.push_back("instance '" + inst.id + "': " + e.what());
      }
    } else if (!task_spaces_.count(inst.task)) {
      errors.push_back("instance '" + inst.id + "': no candidates and no label file for " +
                       std::string(task_name(inst.task)));
    }
  }
  if (!errors.empty())
    throw DataError(std::to_string(errors.size()) + " invalid instance(s):" + list_errors(errors));
}

const Table* Pipeline::find_table(std::string_view id) const {
  auto it = table_index_.find(id);
  return it == table_index_.end() ? nullptr : &tables_[it->second];
}

const Table& Pipeline::table_of(const TaskInstance& instance) const {
  const Table* t = find_table(instance.table_id);
  if (!t) throw DataError("unknown table '" + instance.table_id + "'");
  return *t;
}

std::optional<std::size_t> Pipeline::find_instance(std::string_view id) const {
  auto it = instance_index_.find(id);
  if (it == instance_index_.end()) return std::nullopt;
  return it->second;
}

const LabelSpace& Pipeline::label_space(std::size_t instance_index) const {
  if (own_spaces_.at(instance_index)) return *own_spaces_[instance_index];
  const auto& inst = instances_.at(instance_index);
  auto it = task_spaces_.find(inst.task);
  if (it == task_spaces_.end())
    throw DataError("no label space for " + std::string(task_name(inst.task)));
  return it->second;
}

// ---------------------------------------------------------------- build

std::vector<PromptBuilder::Built> expand_instance(const Pipeline& pipeline, std::size_t index) {
  const auto& inst = pipeline.instances().at(index);
  const auto& table = pipeline.table_of(inst);
  const auto& builder = pipeline.builder();
  const auto& cfg = pipeline.config();
  const auto ctx = builder.prepare(inst, table);

  std::vector<PromptBuilder::Built> out;
  if (is_classification(inst.task)) {
    const auto& space = pipeline.label_space(index);
    ClassifyConfig cc = cfg.classify;
    cc.seed = seed_of(pipeline);
    const auto plan = plan_cls_training(inst, space, cc, index);
    const bool bracketed = inst.task == Task::EntityLinking;
    for (const auto& sample : plan.samples) {
      auto built = builder.build(inst, table, ctx, sample.subset);
      built.record.response = cls_response(sample, space, bracketed);
      out.push_back(std::move(built));
    }
  } else if (is_ranking(inst.task)) {
    if (inst.candidates.empty())
      throw DataError("instance '" + inst.id + "': ranking task without candidates");
    std::vector<std::string> pool = inst.candidates;
    SplitMix64 rng(derive_seed(seed_of(pipeline), index));
    fisher_yates_shuffle(std::span<std::string>(pool), rng);
    const std::size_t s = cfg.rank.subset_size;
    if (s == 0) throw DataError("rank.subset_size must be positive");
    for (std::size_t begin = 0; begin < pool.size(); begin += s) {
      std::span<const std::string> chunk(pool.data() + begin, std::min(s, pool.size() - begin));
      std::vector<std::string> positives;
      for (const auto& g : inst.gold)
        if (std::find(chunk.begin(), chunk.end(), g) != chunk.end()) positives.push_back(g);
      if (positives.empty()) continue;
      auto built = builder.build(inst, table, ctx, chunk);
      built.record.response = format_label_response(positives, true);
      out.push_back(std::move(built));
    }
  } else {
    auto built = builder.build(inst, table, ctx, {});
    built.record.response = format_answer_response(inst.gold);
    out.push_back(std::move(built));
  }
  return out;
}

BuildOutput cmd_build(const Pipeline& pipeline) {
  seed_of(pipeline);
  const auto& instances = pipeline.instances();
  const std::size_t limit = pipeline.builder().plan().model_limit;
  std::vector<std::vector<PromptBuilder::Built>> per_instance(instances.size());
  std::vector<std::optional<std::string>> failures(instances.size());
  std::vector<std::optional<std::string>> notes(instances.size());

  run_indexed(instances.size(), pipeline.config().workers, [&](std::size_t i) {
    try {
      per_instance[i] = expand_instance(pipeline, i);
      if (per_instance[i].empty())
        notes[i] = "instance '" + instances[i].id + "' produced no records";
    } catch (const DataError& e) {
      failures[i] = e.what();
    }
  });

  std::vector<std::string> errors;
  std::set<std::string> bad_tables;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!failures[i]) continue;
    bad_tables.insert(instances[i].table_id);
    errors.push_back("instance '" + instances[i].id + "': " + *failures[i]);
  }
  if (!errors.empty()) {
    std::string ids;
    for (const auto& t : bad_tables) ids += (ids.empty() ? "" : ", ") + t;
    throw DataError(std::to_string(errors.size()) + " instance(s) could not be built; tables: " +
                    ids + list_errors(errors));
  }

  BuildOutput out;
  out.warnings = pipeline.warnings();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (notes[i]) out.warnings.push_back(*notes[i]);
    for (auto& built : per_instance[i]) {
      if (built.tokens > limit)
        throw std::logic_error("built prompt exceeds model_limit for '" + instances[i].id + "'");
      if (built.trimmed_rows)
        out.warnings.push_back("instance '" + instances[i].id + "': trimmed " +
                               std::to_string(built.trimmed_rows) + " row(s) to fit");
      out.max_tokens = std::max(out.max_tokens, built.tokens);
      out.records.push_back(std::move(built.record));
    }
  }
  return out;
}

void write_prompt_records(std::ostream& out, std::span<const PromptRecord> records) {
  for (const auto& r : records) {
    nlohmann::ordered_json obj;
    obj["instruction"] = r.instruction;
    obj["input"] = r.input;
    obj["question"] = r.question;
    obj["response"] = r.response;
    out << obj.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

// ---------------------------------------------------------------- segment

std::vector<Subtable> cmd_segment(std::span<const Table> tables, std::size_t allowed,
                                  std::size_t offset, const Tokenizer& tok) {
  std::vector<Subtable> out;
  std::vector<std::string> errors;
  for (const auto& t : tables) {
    try {
      auto subs = segment_table(t, allowed, offset, tok);
      out.insert(out.end(), subs.begin(), subs.end());
    } catch (const DataError& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty())
    throw DataError(std::to_string(errors.size()) + " table(s) are unsegmentable:" +
                    list_errors(errors));
  return out;
}

void write_subtables(std::ostream& out, std::span<const Subtable> subtables) {
  for (const auto& s : subtables) {
    nlohmann::ordered_json obj;
    obj["table_id"] = s.table_id;
    obj["start_row"] = s.start_row;
    obj["end_row"] = s.end_row;
    obj["nominal_end"] = s.nominal_end;
    out << obj.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

// ---------------------------------------------------------------- predict

namespace {

Prediction predict_one(const Pipeline& pipeline, const OracleProvider& oracles, std::size_t index) {
  const auto& inst = pipeline.instances()[index];
  const auto& table = pipeline.table_of(inst);
  const auto& builder = pipeline.builder();
  const bool text = oracles.needs_prompt_text();
  std::optional<PromptBuilder::Context> ctx;
  if (text) ctx = builder.prepare(inst, table);

  Prediction pred;
  pred.instance_id = inst.id;
  pred.task = inst.task;

  if (is_classification(inst.task)) {
    const auto& space = pipeline.label_space(index);
    auto oracle = oracles.oracle(inst.id, inst.gold, space.labels());
    ClassifyConfig cc = pipeline.config().classify;
    cc.seed = seed_of(pipeline);
    SubsetPromptFn render = [&](const TaskInstance& i, std::span<const std::string> subset) {
      return text ? builder.build(i, table, *ctx, subset).record.assembled : std::string{};
    };
    auto result = classify_instance(inst, space, cc, *oracle, render);
    pred.labels = std::move(result.labels);
    pred.oracle_calls = result.backend_calls;
  } else if (is_ranking(inst.task)) {
    if (inst.candidates.empty())
      throw DataError("instance '" + inst.id + "': ranking task without candidates");
    auto oracle = oracles.oracle(inst.id, inst.gold, inst.candidates);
    NodePromptFn prompt;
    if (text)
      prompt = [&](std::span<const std::string> items) {
        return builder.build(inst, table, *ctx, items).record.assembled;
      };
    auto result = tree_rank(inst.candidates, rank_config_for(pipeline.config(), inst.id), *oracle,
                            prompt);
    pred.labels = std::move(result.ranking);
    pred.oracle_calls = result.stats.oracle_calls;
  } else {
    auto oracle = oracles.oracle(inst.id, inst.gold, {});
    CompletionRequest req;
    if (text) req.prompt = builder.build(inst, table, *ctx, {}).record.assembled;
    req.max_tokens = max_generation_tokens(inst.task);
    req.instance_id = inst.id;
    pred.answer = oracle->complete(req);
    pred.oracle_calls = 1;
  }
  return pred;
}

}  // namespace

std::vector<Prediction> predict_all(const Pipeline& pipeline, const OracleProvider& oracles) {
  seed_of(pipeline);
  std::vector<Prediction> out(pipeline.instances().size());
  run_indexed(out.size(), pipeline.config().workers,
              [&](std::size_t i) { out[i] = predict_one(pipeline, oracles, i); });
  return out;
}

std::vector<Prediction> cmd_classify(const Pipeline& pipeline, const OracleProvider& oracles) {
  seed_of(pipeline);
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < pipeline.instances().size(); ++i)
    if (is_classification(pipeline.instances()[i].task)) picked.push_back(i);
  std::vector<Prediction> out(picked.size());
  run_indexed(picked.size(), pipeline.config().workers,
              [&](std::size_t k) { out[k] = predict_one(pipeline, oracles, picked[k]); });
  return out;
}

void write_classifications(std::ostream& out, std::span<const Prediction> predictions) {
  for (const auto& p : predictions) {
    nlohmann::ordered_json obj;
    obj["instance_id"] = p.instance_id;
    obj["predicted"] = p.labels;
    out << obj.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

// ---------------------------------------------------------------- rank

std::vector<RankRequest> load_rank_requests(std::istream& in) {
  std::vector<RankRequest> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (detail::is_blank(text)) continue;
    auto obj = detail::parse_line(text, line);
    RankRequest req;
    req.instance_id = detail::get_string(obj, "instance_id", line);
    req.candidates = detail::get_string_list(obj, "candidates", line);
    req.gold = detail::get_string_list(obj, "gold", line, false);
    if (req.candidates.empty())
      throw DataError(detail::line_prefix(line) + "'candidates' must not be empty");
    out.push_back(std::move(req));
  }
  return out;
}

std::vector<Prediction> cmd_rank(std::span<const RankRequest> requests, const PipelineConfig& cfg,
                                 const OracleProvider& oracles, const Pipeline* context) {
  cfg.require_seed();
  std::vector<Prediction> out(requests.size());
  run_indexed(requests.size(), cfg.workers, [&](std::size_t i) {
    const auto& req = requests[i];
    auto oracle = oracles.oracle(req.instance_id, req.gold, req.candidates);
    NodePromptFn prompt;
    if (oracles.needs_prompt_text()) {
      std::optional<std::size_t> idx;
      if (context) idx = context->find_instance(req.instance_id);
      if (idx && is_ranking(context->instances()[*idx].task)) {
        const auto& inst = context->instances()[*idx];
        const auto& table = context->table_of(inst);
        auto ctx = context->builder().prepare(inst, table);
        prompt = [context, &inst, &table, ctx](std::span<const std::string> items) {
          return context->builder().build(inst, table, ctx, items).record.assembled;
        };
      } else {
        prompt = [&cfg](std::span<const std::string> items) {
          return generic_rank_prompt(cfg, items);
        };
      }
    }
    auto result =
        tree_rank(req.candidates, rank_config_for(cfg, req.instance_id), *oracle, prompt);
    Prediction p;
    p.instance_id = req.instance_id;
    p.task = Task::RowPopulation;
    p.labels = std::move(result.ranking);
    if (cfg.rank.top_k && p.labels.size() > *cfg.rank.top_k) p.labels.resize(*cfg.rank.top_k);
    p.oracle_calls = result.stats.oracle_calls;
    out[i] = std::move(p);
  });
  return out;
}

void write_rankings(std::ostream& out, std::span<const Prediction> predictions) {
  for (const auto& p : predictions) {
    nlohmann::ordered_json obj;
    obj["instance_id"] = p.instance_id;
    obj["ranking"] = p.labels;
    obj["oracle_calls"] = p.oracle_calls;
    out << obj.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

// ---------------------------------------------------------------- eval

std::map<std::string, Prediction> load_predictions(std::istream& in) {
  std::map<std::string, Prediction> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (detail::is_blank(text)) continue;
    auto obj = detail::parse_line(text, line);
    Prediction p;
    p.instance_id = detail::get_string(obj, "instance_id", line);
    if (obj.contains("predicted")) {
      p.labels = detail::get_string_list(obj, "predicted", line);
    } else if (obj.contains("ranking")) {
      p.labels = detail::get_string_list(obj, "ranking", line);
    } else if (obj.contains("answer")) {
      p.answer = detail::get_string(obj, "answer", line);
    } else {
      throw DataError(detail::line_prefix(line) + "needs 'predicted', 'ranking' or 'answer'");
    }
    if (!out.emplace(p.instance_id, p).second)
      throw DataError(detail::line_prefix(line) + "duplicate prediction for '" + p.instance_id +
                      "'");
  }
  return out;
}

EvalReport cmd_eval(const Pipeline& pipeline,
                    const std::map<std::string, Prediction>& predictions) {
  for (const auto& [id, p] : predictions)
    if (!pipeline.find_instance(id))
      throw DataError("prediction for unknown instance '" + id + "'");

  struct Bucket {
    std::vector<std::vector<std::string>> label_preds, label_golds;
    std::vector<std::string> text_preds, text_golds;
    std::vector<std::vector<std::string>> rankings, relevants;
    std::vector<std::string> ids;
    std::size_t count = 0;
  };
  std::map<Task, Bucket> buckets;
  EvalReport report;
  report.instance_count = pipeline.instances().size();

  for (const auto& inst : pipeline.instances()) {
    auto& b = buckets[inst.task];
    ++b.count;
    const Prediction* p = nullptr;
    if (auto it = predictions.find(inst.id); it != predictions.end()) p = &it->second;
    if (!p) ++report.warnings["missing_prediction"];
    static const Prediction kEmpty;
    const Prediction& pred = p ? *p : kEmpty;

    switch (inst.task) {
      case Task::ColumnTypeAnnotation:
      case Task::RelationExtraction:
        b.label_preds.push_back(pred.labels);
        b.label_golds.push_back(inst.gold);
        break;
      case Task::EntityLinking:
        b.text_preds.push_back(!pred.labels.empty() ? pred.labels.front() : pred.answer);
        b.text_golds.push_back(inst.gold.empty() ? std::string{} : inst.gold.front());
        break;
      case Task::RowPopulation:
      case Task::SchemaAugmentation:
        b.rankings.push_back(pred.labels);
        b.relevants.push_back(inst.gold);
        b.ids.push_back(inst.id);
        break;
      case Task::HierarchicalQa:
      case Task::HighlightedCellsQa:
      case Task::FactVerification:
        b.text_preds.push_back(pred.answer.empty() ? join(pred.labels, ", ") : pred.answer);
        b.text_golds.push_back(join(inst.gold, ", "));
        break;
    }
  }

  for (auto& [task, b] : buckets) {
    TaskMetrics m;
    m.instances = b.count;
    switch (task) {
      case Task::ColumnTypeAnnotation:
      case Task::RelationExtraction: {
        auto prf = micro_prf(b.label_preds, b.label_golds);
        m.precision = prf.precision;
        m.recall = prf.recall;
        m.micro_f1 = prf.f1;
        break;
      }
      case Task::RowPopulation:
      case Task::SchemaAugmentation: {
        auto res = mean_average_precision(b.rankings, b.relevants);
        m.map = res.map;
        if (res.skipped) report.warnings["no_relevant_items"] += res.skipped;
        for (std::size_t i = 0; i < res.per_instance.size(); ++i)
          if (res.per_instance[i])
            report.ranking_breakdown.push_back(InstanceScore{b.ids[i], task, *res.per_instance[i]});
        break;
      }
      default:
        m.accuracy = exact_accuracy(b.text_preds, b.text_golds, true);
        break;
    }
    report.tasks[task] = m;
  }
  return report;
}

// ---------------------------------------------------------------- inspect

std::string cmd_inspect(const Pipeline& pipeline, const std::string& instance_id,
                        std::size_t record) {
  auto index = instance_id.empty() && !pipeline.instances().empty()
                   ? std::optional<std::size_t>(0)
                   : pipeline.find_instance(instance_id);
  if (!index) throw DataError("no instance '" + instance_id + "'");
  const auto& inst = pipeline.instances()[*index];
  const auto ctx = pipeline.builder().prepare(inst, pipeline.table_of(inst));
  const auto built = expand_instance(pipeline, *index);
  if (record >= built.size())
    throw DataError("instance '" + inst.id + "' has " + std::to_string(built.size()) +
                    " record(s); asked for record " + std::to_string(record));
  const auto& b = built[record];

  std::ostringstream out;
  out << "instance  " << inst.id << '\n'
      << "task      " << task_name(inst.task) << '\n'
      << "table     " << inst.table_id << '\n';
  if (!is_ranking(inst.task))
    out << "subtable  rows [" << ctx.subtable.start_row << ", " << ctx.subtable.end_row
        << "), nominal end " << ctx.subtable.nominal_end << '\n';
  if (ctx.warning) out << "warning   " << *ctx.warning << '\n';
  out << "tokens    " << b.tokens << " / " << pipeline.builder().plan().model_limit;
  if (b.trimmed_rows) out << " (" << b.trimmed_rows << " row(s) trimmed)";
  out << '\n'
      << "record    " << record + 1 << " of " << built.size() << "\n\n"
      << b.record.assembled << '\n'
      << b.record.response << '\n';
  return out.str();
}

}  // namespace tabprompt
