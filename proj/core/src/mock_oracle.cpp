#include "tabprompt/mock_oracle.hpp"

#include <algorithm>
#include <numeric>

#include "tabprompt/error.hpp"
#include "tabprompt/random.hpp"
#include "tabprompt/response_parser.hpp"
#include "tabprompt/serializer.hpp"

namespace tabprompt {

std::vector<std::string> mock_rank(std::span<const std::string> items,
                                   const std::map<std::string, double, std::less<>>& relevance,
                                   double noise, std::uint64_t seed) {
  std::vector<double> scores;
  scores.reserve(items.size());
  for (const auto& item : items) {
    auto it = relevance.find(item);
    if (it == relevance.end()) throw DataError("mock_rank: no relevance score for '" + item + "'");
    scores.push_back(it->second);
  }
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  if (noise > 0.0 && order.size() > 1) {
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
      if (rng.uniform() < noise) std::swap(order[i], order[i + 1]);
  }

  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto i : order) out.push_back(items[i]);
  return out;
}

MockOracle::MockOracle(Options options) : options_(std::move(options)) {}

std::string MockOracle::complete(const CompletionRequest& request) {
  ++complete_calls_;
  const std::string nota = options_.nota_token + ".";
  auto gold_it = options_.gold.find(request.instance_id);

  if (request.options.empty()) {
    if (gold_it == options_.gold.end() || gold_it->second.empty()) return {};
    return format_answer_response(gold_it->second);
  }
  if (options_.mode == Mode::AlwaysNota || gold_it == options_.gold.end()) return nota;

  std::vector<std::string> hits;
  for (const auto& option : request.options) {
    const auto key = normalize_text(option);
    for (const auto& g : gold_it->second) {
      if (normalize_text(g) == key) {
        hits.push_back(option);
        break;
      }
    }
  }
  if (hits.empty()) return nota;
  return format_label_response(hits, request.bracketed);
}

std::vector<std::string> MockOracle::rank(std::span<const std::string> items, std::string_view) {
  ++rank_calls_;
  std::uint64_t key = options_.seed;
  for (const auto& item : items) key = fnv1a64(item, key) ^ 0x1F;
  return mock_rank(items, options_.relevance, options_.noise, key);
}

}  // namespace tabprompt
