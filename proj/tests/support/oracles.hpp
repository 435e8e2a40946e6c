#pragma once

// Brute-force reference metrics, written independently of the library.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

namespace tabprompt::testing {

struct RefPrf {
  double precision, recall, f1;
};

inline RefPrf reference_prf(const std::vector<std::vector<std::string>>& preds,
                            const std::vector<std::vector<std::string>>& golds) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    std::set<std::string> p(preds[i].begin(), preds[i].end());
    std::set<std::string> g(golds[i].begin(), golds[i].end());
    for (const auto& x : p) (g.count(x) ? tp : fp) += 1;
    for (const auto& x : g)
      if (!p.count(x)) fn += 1;
  }
  double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
  return {prec, rec, f1};
}

/// Precision at every cut-off, summed at relevant positions.
inline double reference_ap(const std::vector<std::string>& ranking,
                           const std::vector<std::string>& relevant) {
  std::set<std::string> rel(relevant.begin(), relevant.end());
  double sum = 0;
  for (std::size_t p = 1; p <= ranking.size(); ++p) {
    if (!rel.count(ranking[p - 1])) continue;
    std::size_t hits = 0;
    for (std::size_t q = 0; q < p; ++q) hits += rel.count(ranking[q]);
    sum += double(hits) / double(p);
  }
  return sum / double(rel.size());
}

/// Mean AP over every arrangement of k relevant among n positions.
inline double enumerated_expected_ap(std::size_t n, std::size_t k) {
  std::vector<int> mask(n, 0);
  std::fill(mask.end() - static_cast<std::ptrdiff_t>(k), mask.end(), 1);
  double total = 0;
  std::size_t count = 0;
  do {
    double sum = 0;
    std::size_t hits = 0;
    for (std::size_t p = 0; p < n; ++p)
      if (mask[p]) sum += double(++hits) / double(p + 1);
    total += sum / double(k);
    ++count;
  } while (std::next_permutation(mask.begin(), mask.end()));
  return total / double(count);
}

}  // namespace tabprompt::testing
