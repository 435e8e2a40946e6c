#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabprompt/task.hpp"

namespace tabprompt {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// Micro precision/recall/F1 with TP, FP and FN pooled over instances. Each
/// instance's labels are treated as a set. Zero denominators give 0.
/// Throws DataError on length mismatch.
Prf micro_prf(std::span<const std::vector<std::string>> predictions,
              std::span<const std::vector<std::string>> golds);

/// Trim, drop one trailing period, trim, lowercase.
std::string normalize_answer(std::string_view text);

/// Fraction of positions where prediction equals gold (0 for no instances).
double exact_accuracy(std::span<const std::string> predictions,
                      std::span<const std::string> golds, bool normalize);

/// (1/|R|) * sum over positions p holding a relevant item of
/// (relevant items in the top p) / p. Relevant items missing from the
/// ranking contribute 0. Throws DataError when `relevant` is empty.
double average_precision(std::span<const std::string> ranking,
                         std::span<const std::string> relevant);

struct MapResult {
  double map = 0.0;
  /// AP per instance; std::nullopt where the instance had no relevant items.
  std::vector<std::optional<double>> per_instance;
  std::size_t skipped = 0;
};

/// Mean AP over instances that have relevant items; the rest are skipped
/// and counted.
MapResult mean_average_precision(std::span<const std::vector<std::string>> rankings,
                                 std::span<const std::vector<std::string>> relevants);

/// Expected AP of a uniformly random ordering of n items, k of them relevant:
/// (H_n + (k-1)/(n-1) * (n - H_n)) / n.
double random_permutation_expected_ap(std::size_t n, std::size_t k);

/// Metrics for one task; only the fields the task is scored by are set.
struct TaskMetrics {
  std::size_t instances = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> micro_f1;
  std::optional<double> accuracy;
  std::optional<double> map;
};

struct InstanceScore {
  std::string instance_id;
  Task task = Task::RowPopulation;
  double value = 0.0;
};

struct EvalReport {
  std::map<Task, TaskMetrics> tasks;
  std::size_t instance_count = 0;
  std::map<std::string, std::size_t> warnings;
  /// AP of every scored ranking instance, in input order.
  std::vector<InstanceScore> ranking_breakdown;
};

std::string report_to_json(const EvalReport& report);
/// Aligned plain-text table, one row per task.
std::string report_to_text(const EvalReport& report);

}  // namespace tabprompt
