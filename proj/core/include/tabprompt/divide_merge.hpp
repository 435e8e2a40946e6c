#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tabprompt/backend.hpp"
#include "tabprompt/error.hpp"
#include "tabprompt/serializer.hpp"
#include "tabprompt/task.hpp"

namespace tabprompt {

inline constexpr std::string_view kNoneOfTheAbove = "none of the above";

/// Ordered, duplicate-free label set plus the "none of the above" token.
class LabelSpace {
 public:
  /// Throws DataError for an empty list, duplicates, or a label equal to
  /// the NOTA token.
  explicit LabelSpace(std::vector<std::string> labels,
                      std::string nota_token = std::string(kNoneOfTheAbove));

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& nota() const noexcept { return nota_; }
  std::size_t size() const noexcept { return labels_.size(); }
  /// Position of `label` in the space, or size() when absent.
  std::size_t index_of(std::string_view label) const;

 private:
  std::vector<std::string> labels_;
  std::string nota_;
};

/// Label-space file: one label per line, blank lines skipped.
LabelSpace load_label_space(const std::string& path);

struct ClassifyConfig {
  std::size_t subset_size = 10;
  /// Pos : Neg records per instance.
  std::size_t pos_ratio = 1;
  std::size_t neg_ratio = 3;
  std::size_t runoff_rounds = 3;
  std::uint64_t seed = 0;
  /// Concurrent subset queries per instance (1 = sequential).
  std::size_t max_in_flight = 1;

  void validate() const;
};

/// Order-preserving chunks of `subset_size` labels, each followed by the
/// NOTA token. The last chunk may be shorter.
std::vector<std::vector<std::string>> divide_labels(const LabelSpace& space,
                                                    std::size_t subset_size);

/// Builds the prompt for one candidate subset of an instance.
using SubsetPromptFn =
    std::function<std::string(const TaskInstance&, std::span<const std::string> subset)>;

struct ClassifyResult {
  /// Predicted labels in label-space order; may be empty.
  std::vector<std::string> labels;
  std::size_t backend_calls = 0;
  std::size_t unmatched_fragments = 0;
  std::size_t runoff_rounds_used = 0;
};

/// Raised when a subset query fails; no partial merge is returned.
class ClassifyError : public BackendError {
 public:
  ClassifyError(const std::string& what, std::vector<std::size_t> completed)
      : BackendError(what), completed_(std::move(completed)) {}
  /// Subset indices (within the failing round) that completed successfully.
  const std::vector<std::size_t>& completed_subsets() const noexcept { return completed_; }

 private:
  std::vector<std::size_t> completed_;
};

/// Queries every subset of `space`, parses each answer against its subset,
/// and merges the union minus NOTA. Entity linking (single label) re-queries
/// multiple survivors for up to cfg.runoff_rounds rounds, then keeps the
/// first survivor in label order.
ClassifyResult classify_instance(const TaskInstance& instance, const LabelSpace& space,
                                 const ClassifyConfig& cfg, OracleBackend& backend,
                                 const SubsetPromptFn& render);

/// One planned training prompt: a subset and the answer it teaches.
struct ClsSample {
  std::size_t subset_index = 0;
  std::vector<std::string> subset;
  /// Gold labels inside the subset (empty for Neg samples).
  std::vector<std::string> positives;
  bool is_pos() const noexcept { return !positives.empty(); }
};

struct ClsPlan {
  std::vector<ClsSample> samples;
  std::vector<std::string> warnings;
};

/// Pos samples for every subset holding a gold label (subset order), then
/// Neg samples drawn without replacement from the remaining subsets, sorted
/// by subset index: pos_count * neg_ratio / pos_ratio of them (rounded up),
/// or neg_ratio when pos_ratio is 0. Throws DataError when the instance has
/// no gold label in the space, or more than one for a single-label task.
ClsPlan plan_cls_training(const TaskInstance& instance, const LabelSpace& space,
                          const ClassifyConfig& cfg, std::uint64_t stream);

/// Expected response text for a sample: gold labels joined with ", " plus a
/// period, or "none of the above." for Neg samples.
std::string cls_response(const ClsSample& sample, const LabelSpace& space, bool bracketed);

using LabelSpaceFn = std::function<const LabelSpace&(const TaskInstance&)>;
using SubsetRecordFn =
    std::function<PromptRecord(const TaskInstance&, std::span<const std::string> subset)>;

struct ClsTraining {
  std::vector<PromptRecord> records;
  std::vector<std::string> warnings;
};

/// Expands classification instances into Pos/Neg prompt records. The Neg
/// draws for instance i use sub-stream i of cfg.seed.
ClsTraining build_cls_training(std::span<const TaskInstance> instances,
                               const LabelSpaceFn& space_of, const ClassifyConfig& cfg,
                               const SubsetRecordFn& make_record);

}  // namespace tabprompt
