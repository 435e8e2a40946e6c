#include "tabprompt/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <unordered_set>

#include "tabprompt/error.hpp"

namespace tabprompt {
namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw DataError(std::string(what) + ": " + std::to_string(a) + " predictions vs " +
                    std::to_string(b) + " golds");
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Prf micro_prf(std::span<const std::vector<std::string>> predictions,
              std::span<const std::vector<std::string>> golds) {
  require_same_length(predictions.size(), golds.size(), "micro_prf");
  Prf out;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    std::unordered_set<std::string> pred(predictions[i].begin(), predictions[i].end());
    std::unordered_set<std::string> gold(golds[i].begin(), golds[i].end());
    for (const auto& p : pred) (gold.count(p) ? out.tp : out.fp)++;
    for (const auto& g : gold)
      if (!pred.count(g)) ++out.fn;
  }
  out.precision = ratio(out.tp, out.tp + out.fp);
  out.recall = ratio(out.tp, out.tp + out.fn);
  const double sum = out.precision + out.recall;
  out.f1 = sum == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / sum;
  return out;
}

std::string normalize_answer(std::string_view text) {
  auto trim = [](std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return std::string_view{};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
  };
  text = trim(text);
  if (!text.empty() && text.back() == '.') text = trim(text.substr(0, text.size() - 1));
  std::string out(text);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

double exact_accuracy(std::span<const std::string> predictions,
                      std::span<const std::string> golds, bool normalize) {
  require_same_length(predictions.size(), golds.size(), "exact_accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool same = normalize ? normalize_answer(predictions[i]) == normalize_answer(golds[i])
                                : predictions[i] == golds[i];
    hits += same ? 1 : 0;
  }
  return ratio(hits, predictions.size());
}

double average_precision(std::span<const std::string> ranking,
                         std::span<const std::string> relevant) {
  std::unordered_set<std::string_view> rel(relevant.begin(), relevant.end());
  if (rel.empty()) throw DataError("average_precision: relevant set is empty");
  std::size_t found = 0;
  double sum = 0.0;
  std::unordered_set<std::string_view> seen;
  for (std::size_t p = 0; p < ranking.size(); ++p) {
    if (!rel.count(ranking[p]) || !seen.insert(ranking[p]).second) continue;
    ++found;
    sum += static_cast<double>(found) / static_cast<double>(p + 1);
  }
  return sum / static_cast<double>(rel.size());
}

MapResult mean_average_precision(std::span<const std::vector<std::string>> rankings,
                                 std::span<const std::vector<std::string>> relevants) {
  require_same_length(rankings.size(), relevants.size(), "mean_average_precision");
  MapResult out;
  double sum = 0.0;
  std::size_t scored = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    if (relevants[i].empty()) {
      out.per_instance.push_back(std::nullopt);
      ++out.skipped;
      continue;
    }
    const double ap = average_precision(rankings[i], relevants[i]);
    out.per_instance.push_back(ap);
    sum += ap;
    ++scored;
  }
  out.map = scored == 0 ? 0.0 : sum / static_cast<double>(scored);
  return out;
}

double random_permutation_expected_ap(std::size_t n, std::size_t k) {
  if (n == 0 || k == 0 || k > n) throw DataError("expected AP needs 0 < k <= n");
  double harmonic = 0.0;
  for (std::size_t p = 1; p <= n; ++p) harmonic += 1.0 / static_cast<double>(p);
  if (n == 1) return 1.0;
  const double dn = static_cast<double>(n);
  return (harmonic + static_cast<double>(k - 1) / (dn - 1.0) * (dn - harmonic)) / dn;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["instance_count"] = report.instance_count;
  auto& tasks = doc["tasks"];
  tasks = nlohmann::ordered_json::object();
  for (const auto& [task, m] : report.tasks) {
    nlohmann::ordered_json entry;
    entry["instances"] = m.instances;
    if (m.precision) entry["precision"] = *m.precision;
    if (m.recall) entry["recall"] = *m.recall;
    if (m.micro_f1) entry["micro_f1"] = *m.micro_f1;
    if (m.accuracy) entry["accuracy"] = *m.accuracy;
    if (m.map) entry["map"] = *m.map;
    tasks[std::string(task_name(task))] = std::move(entry);
  }
  doc["warnings"] = report.warnings;
  auto& breakdown = doc["ranking_breakdown"];
  breakdown = nlohmann::ordered_json::array();
  for (const auto& s : report.ranking_breakdown)
    breakdown.push_back({{"instance_id", s.instance_id},
                         {"task", std::string(task_name(s.task))},
                         {"average_precision", s.value}});
  return doc.dump(2);
}

std::string report_to_text(const EvalReport& report) {
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return std::string(buf);
  };
  std::size_t width = 4;
  for (const auto& [task, m] : report.tasks) width = std::max(width, task_name(task).size());

  std::string out;
  auto line = [&](std::string_view name, const std::vector<std::string>& cols) {
    std::string row(name);
    row.resize(width, ' ');
    for (const auto& c : cols) {
      std::string padded(10 - std::min<std::size_t>(10, c.size()), ' ');
      row += "  " + padded + c;
    }
    out += row + "\n";
  };
  line("task", {"n", "precision", "recall", "micro_f1", "accuracy", "map"});
  for (const auto& [task, m] : report.tasks)
    line(task_name(task), {std::to_string(m.instances), cell(m.precision), cell(m.recall),
                           cell(m.micro_f1), cell(m.accuracy), cell(m.map)});
  for (const auto& [name, count] : report.warnings)
    out += "warning " + name + ": " + std::to_string(count) + "\n";
  return out;
}

}  // namespace tabprompt
