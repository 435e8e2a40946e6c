#include "tabprompt/divide_merge.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <numeric>
#include <unordered_set>

#include "tabprompt/random.hpp"
#include "tabprompt/response_parser.hpp"

namespace tabprompt {
namespace {

struct SubsetAnswer {
  std::vector<std::string> labels;
  std::size_t unmatched = 0;
};

/// Runs one divide-and-merge round; answers are indexed by subset so the
/// merge does not depend on completion order.
std::vector<SubsetAnswer> query_subsets(const TaskInstance& instance,
                                        const std::vector<std::vector<std::string>>& subsets,
                                        const ClassifyConfig& cfg, OracleBackend& backend,
                                        const SubsetPromptFn& render) {
  const bool bracketed = instance.task == Task::EntityLinking;
  std::vector<SubsetAnswer> answers(subsets.size());
  std::vector<bool> done(subsets.size(), false);

  auto ask = [&](std::size_t i) {
    CompletionRequest req;
    req.prompt = render(instance, subsets[i]);
    req.max_tokens = max_generation_tokens(instance.task);
    req.instance_id = instance.id;
    req.options = subsets[i];
    req.bracketed = bracketed;
    auto parsed = parse_multilabel(backend.complete(req), subsets[i]);
    return SubsetAnswer{std::move(parsed.labels), parsed.unmatched};
  };

  auto completed = [&] {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < done.size(); ++i)
      if (done[i]) idx.push_back(i);
    return idx;
  };
  auto fail = [&](std::size_t i, const std::exception& e) -> ClassifyError {
    return ClassifyError("instance '" + instance.id + "': subset " + std::to_string(i) +
                             " failed: " + e.what(),
                         completed());
  };

  const std::size_t width = std::max<std::size_t>(1, cfg.max_in_flight);
  for (std::size_t begin = 0; begin < subsets.size(); begin += width) {
    const std::size_t end = std::min(subsets.size(), begin + width);
    if (width == 1) {
      try {
        answers[begin] = ask(begin);
        done[begin] = true;
      } catch (const std::exception& e) {
        throw fail(begin, e);
      }
      continue;
    }
    std::vector<std::future<SubsetAnswer>> pending;
    for (std::size_t i = begin; i < end; ++i)
      pending.push_back(std::async(std::launch::async, ask, i));
    std::optional<ClassifyError> error;
    for (std::size_t i = begin; i < end; ++i) {
      try {
        answers[i] = pending[i - begin].get();
        done[i] = true;
      } catch (const std::exception& e) {
        if (!error) error.emplace(fail(i, e));
      }
    }
    if (error) throw ClassifyError(error->what(), completed());
  }
  return answers;
}

/// Union of subset answers minus NOTA, in label-space order.
std::vector<std::string> merge_answers(const std::vector<SubsetAnswer>& answers,
                                       const LabelSpace& space) {
  std::vector<bool> hit(space.size(), false);
  for (const auto& answer : answers)
    for (const auto& label : answer.labels) {
      auto i = space.index_of(label);
      if (i < space.size()) hit[i] = true;
    }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (hit[i]) out.push_back(space.labels()[i]);
  return out;
}

}  // namespace

LabelSpace::LabelSpace(std::vector<std::string> labels, std::string nota_token)
    : labels_(std::move(labels)), nota_(std::move(nota_token)) {
  if (labels_.empty()) throw DataError("label space is empty");
  std::unordered_set<std::string> seen;
  for (const auto& label : labels_) {
    if (label == nota_) throw DataError("label space contains the NOTA token '" + nota_ + "'");
    if (!seen.insert(label).second) throw DataError("duplicate label '" + label + "'");
  }
}

std::size_t LabelSpace::index_of(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  return static_cast<std::size_t>(it - labels_.begin());
}

LabelSpace load_label_space(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file '" + path + "'");
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    labels.push_back(line);
  }
  return LabelSpace(std::move(labels));
}

void ClassifyConfig::validate() const {
  if (subset_size < 2) throw DataError("classify subset_size must be >= 2");
}

std::vector<std::vector<std::string>> divide_labels(const LabelSpace& space,
                                                    std::size_t subset_size) {
  if (subset_size == 0) throw DataError("subset size must be positive");
  std::vector<std::vector<std::string>> out;
  const auto& labels = space.labels();
  for (std::size_t begin = 0; begin < labels.size(); begin += subset_size) {
    const auto end = std::min(labels.size(), begin + subset_size);
    std::vector<std::string> chunk(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                                   labels.begin() + static_cast<std::ptrdiff_t>(end));
    chunk.push_back(space.nota());
    out.push_back(std::move(chunk));
  }
  return out;
}

ClassifyResult classify_instance(const TaskInstance& instance, const LabelSpace& space,
                                 const ClassifyConfig& cfg, OracleBackend& backend,
                                 const SubsetPromptFn& render) {
  if (!is_classification(instance.task))
    throw DataError("instance '" + instance.id + "' is not a classification task");
  cfg.validate();

  ClassifyResult result;
  auto run_round = [&](const LabelSpace& round_space) {
    auto subsets = divide_labels(round_space, cfg.subset_size);
    auto answers = query_subsets(instance, subsets, cfg, backend, render);
    result.backend_calls += subsets.size();
    for (const auto& a : answers) result.unmatched_fragments += a.unmatched;
    return merge_answers(answers, round_space);
  };

  auto survivors = run_round(space);
  if (!is_single_label(instance.task) || survivors.size() <= 1) {
    result.labels = std::move(survivors);
    return result;
  }

  for (std::size_t round = 0; round < cfg.runoff_rounds && survivors.size() > 1; ++round) {
    ++result.runoff_rounds_used;
    auto next = run_round(LabelSpace(survivors, space.nota()));
    if (next.empty()) break;
    survivors = std::move(next);
  }
  std::sort(survivors.begin(), survivors.end(), [&](const auto& a, const auto& b) {
    return space.index_of(a) < space.index_of(b);
  });
  result.labels = {survivors.front()};
  return result;
}

ClsPlan plan_cls_training(const TaskInstance& instance, const LabelSpace& space,
                          const ClassifyConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  std::unordered_set<std::string> gold;
  for (const auto& g : instance.gold)
    if (space.index_of(g) < space.size()) gold.insert(g);
  if (gold.empty())
    throw DataError("instance '" + instance.id + "' has no gold label in its label space");
  if (is_single_label(instance.task) && gold.size() != 1)
    throw DataError("instance '" + instance.id + "' is single-label but has " +
                    std::to_string(gold.size()) + " gold labels");

  ClsPlan plan;
  auto subsets = divide_labels(space, cfg.subset_size);
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    std::vector<std::string> positives;
    for (const auto& label : subsets[i])
      if (gold.count(label)) positives.push_back(label);
    if (positives.empty()) {
      negatives.push_back(i);
    } else if (cfg.pos_ratio > 0) {
      plan.samples.push_back(ClsSample{i, subsets[i], std::move(positives)});
    }
  }

  std::size_t pos_count = 0;
  for (const auto& s : plan.samples) pos_count += s.is_pos() ? 1 : 0;
  std::size_t wanted = cfg.pos_ratio == 0
                           ? cfg.neg_ratio
                           : (pos_count * cfg.neg_ratio + cfg.pos_ratio - 1) / cfg.pos_ratio;
  if (wanted > negatives.size()) {
    plan.warnings.push_back("instance '" + instance.id + "': wanted " + std::to_string(wanted) +
                            " negative subsets, only " + std::to_string(negatives.size()) +
                            " exist");
    wanted = negatives.size();
  }

  SplitMix64 rng(derive_seed(cfg.seed, stream));
  // Partial Fisher-Yates: the first `wanted` slots become the sample.
  for (std::size_t i = 0; i < wanted; ++i) {
    auto j = i + static_cast<std::size_t>(rng.below(negatives.size() - i));
    std::swap(negatives[i], negatives[j]);
  }
  negatives.resize(wanted);
  std::sort(negatives.begin(), negatives.end());
  for (auto i : negatives) plan.samples.push_back(ClsSample{i, subsets[i], {}});
  return plan;
}

std::string cls_response(const ClsSample& sample, const LabelSpace& space, bool bracketed) {
  if (!sample.is_pos()) return space.nota() + ".";
  return format_label_response(sample.positives, bracketed);
}

ClsTraining build_cls_training(std::span<const TaskInstance> instances,
                               const LabelSpaceFn& space_of, const ClassifyConfig& cfg,
                               const SubsetRecordFn& make_record) {
  ClsTraining out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const LabelSpace& space = space_of(inst);
    auto plan = plan_cls_training(inst, space, cfg, i);
    for (auto& w : plan.warnings) out.warnings.push_back(std::move(w));
    for (const auto& sample : plan.samples) {
      auto record = make_record(inst, sample.subset);
      record.response = cls_response(sample, space, inst.task == Task::EntityLinking);
      out.records.push_back(std::move(record));
    }
  }
  return out;
}

}  // namespace tabprompt
