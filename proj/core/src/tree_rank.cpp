#include "tabprompt/tree_rank.hpp"

#include <algorithm>
#include <future>
#include <unordered_set>

#include "tabprompt/error.hpp"
#include "tabprompt/random.hpp"

namespace tabprompt {
namespace {

using Items = std::vector<std::string>;

class Ranker {
 public:
  Ranker(const RankConfig& cfg, OracleBackend& oracle, const NodePromptFn& prompt)
      : cfg_(cfg), oracle_(oracle), prompt_(prompt) {}

  Items rank_node(const Items& items, std::size_t layer) {
    auto ranked = oracle_.rank(items, prompt_ ? prompt_(items) : std::string{});
    check_permutation(items, ranked, layer);
    return ranked;
  }

  /// Ranks one layer of a lineage and recurses into its red and blue
  /// descendants. `nodes` are unranked full nodes in priority order;
  /// `carry` is an already-ranked half waiting for a partner.
  Items lineage(std::vector<Items> nodes, std::optional<Items> carry, NodeColor color,
                std::size_t layer) {
    if (nodes.empty()) return carry ? std::move(*carry) : Items{};

    std::vector<Items> ranked = rank_layer(nodes, color, layer);
    if (ranked.size() == 1 && !carry) return std::move(ranked.front());

    std::vector<Items> reds;
    std::vector<Items> blues;
    for (const auto& node : ranked) {
      auto halves = split_halves(node, cfg_.subset_size / 2);
      reds.push_back(std::move(halves.red));
      blues.push_back(std::move(halves.blue));
    }
    // The carry descends from this lineage's color; it rejoins the
    // top halves of the next layer.
    auto red_merge = pair_merge(std::move(reds), std::move(carry));
    auto blue_merge = pair_merge(std::move(blues), std::nullopt);

    Items out = lineage(std::move(red_merge.full_nodes), std::move(red_merge.carry),
                        NodeColor::Red, layer + 1);
    Items tail = lineage(std::move(blue_merge.full_nodes), std::move(blue_merge.carry),
                         NodeColor::Blue, layer + 1);
    out.insert(out.end(), std::make_move_iterator(tail.begin()),
               std::make_move_iterator(tail.end()));
    return out;
  }

  RankStats stats;
  std::vector<RankNode> trace;

 private:
  std::vector<Items> rank_layer(const std::vector<Items>& nodes, NodeColor color,
                                std::size_t layer) {
    stats.oracle_calls += nodes.size();
    stats.layers = std::max(stats.layers, layer);
    std::vector<Items> ranked(nodes.size());
    const std::size_t width = std::max<std::size_t>(1, cfg_.max_in_flight);
    if (width == 1 || nodes.size() == 1) {
      for (std::size_t i = 0; i < nodes.size(); ++i) ranked[i] = rank_node(nodes[i], layer);
      record(ranked, color, layer);
      return ranked;
    }
    for (std::size_t begin = 0; begin < nodes.size(); begin += width) {
      const std::size_t end = std::min(nodes.size(), begin + width);
      std::vector<std::future<Items>> pending;
      for (std::size_t i = begin; i < end; ++i)
        pending.push_back(std::async(std::launch::async,
                                     [this, &nodes, i, layer] { return rank_node(nodes[i], layer); }));
      for (std::size_t i = begin; i < end; ++i) ranked[i] = pending[i - begin].get();
    }
    record(ranked, color, layer);
    return ranked;
  }

  void record(const std::vector<Items>& ranked, NodeColor color, std::size_t layer) {
    if (!cfg_.record_trace) return;
    for (const auto& items : ranked) trace.push_back(RankNode{items, color, layer});
  }

  static void check_permutation(const Items& input, const Items& output, std::size_t layer) {
    bool ok = input.size() == output.size();
    if (ok) {
      std::unordered_multiset<std::string_view> expected(input.begin(), input.end());
      for (const auto& item : output) {
        auto it = expected.find(item);
        if (it == expected.end()) {
          ok = false;
          break;
        }
        expected.erase(it);
      }
    }
    if (!ok) {
      std::string head = input.empty() ? std::string{} : input.front();
      throw BackendError("oracle returned a non-permutation for the layer-" +
                         std::to_string(layer) + " node of " + std::to_string(input.size()) +
                         " items starting with '" + head + "'");
    }
  }

  const RankConfig& cfg_;
  OracleBackend& oracle_;
  const NodePromptFn& prompt_;
};

}  // namespace

void RankConfig::validate(std::size_t candidate_count) const {
  if (subset_size < 2 || subset_size % 2 != 0)
    throw DataError("rank subset_size must be even and >= 2");
  if (top_k && *top_k > candidate_count)
    throw DataError("top_k " + std::to_string(*top_k) + " exceeds candidate count " +
                    std::to_string(candidate_count));
}

Halves split_halves(std::span<const std::string> ranked_items) {
  return split_halves(ranked_items, (ranked_items.size() + 1) / 2);
}

Halves split_halves(std::span<const std::string> ranked_items, std::size_t red_capacity) {
  const auto cut = std::min(ranked_items.size(), red_capacity);
  return Halves{Items(ranked_items.begin(), ranked_items.begin() + static_cast<std::ptrdiff_t>(cut)),
                Items(ranked_items.begin() + static_cast<std::ptrdiff_t>(cut), ranked_items.end())};
}

PairMerge pair_merge(std::vector<Items> halves, std::optional<Items> carry) {
  if (carry) halves.push_back(std::move(*carry));
  std::erase_if(halves, [](const Items& h) { return h.empty(); });

  PairMerge out;
  std::size_t i = 0;
  for (; i + 1 < halves.size(); i += 2) {
    Items full = std::move(halves[i]);
    full.insert(full.end(), std::make_move_iterator(halves[i + 1].begin()),
                std::make_move_iterator(halves[i + 1].end()));
    out.full_nodes.push_back(std::move(full));
  }
  if (i < halves.size()) out.carry = std::move(halves[i]);
  return out;
}

RankResult tree_rank(std::span<const std::string> candidates, const RankConfig& cfg,
                     OracleBackend& oracle, const NodePromptFn& prompt) {
  if (candidates.empty()) throw DataError("tree_rank needs at least one candidate");
  cfg.validate(candidates.size());
  {
    std::unordered_set<std::string_view> seen;
    for (const auto& c : candidates)
      if (!seen.insert(c).second) throw DataError("duplicate candidate '" + c + "'");
  }

  Ranker ranker(cfg, oracle, prompt);
  ranker.stats.shuffle_seed = cfg.seed;
  const std::size_t s = cfg.subset_size;

  RankResult result;
  if (candidates.size() <= s) {
    ranker.stats.subsets = 1;
    ranker.stats.layers = 1;
    ranker.stats.oracle_calls = 1;
    result.ranking = ranker.rank_node(Items(candidates.begin(), candidates.end()), 1);
    if (cfg.record_trace) result.trace.push_back(RankNode{result.ranking, NodeColor::Red, 1});
    result.stats = ranker.stats;
    return result;
  }

  Items pool(candidates.begin(), candidates.end());
  SplitMix64 rng(cfg.seed);
  fisher_yates_shuffle(std::span<std::string>(pool), rng);

  std::vector<Items> subsets;
  for (std::size_t begin = 0; begin < pool.size(); begin += s) {
    const auto end = std::min(pool.size(), begin + s);
    subsets.emplace_back(std::make_move_iterator(pool.begin() + static_cast<std::ptrdiff_t>(begin)),
                         std::make_move_iterator(pool.begin() + static_cast<std::ptrdiff_t>(end)));
  }
  ranker.stats.subsets = subsets.size();

  result.ranking = ranker.lineage(std::move(subsets), std::nullopt, NodeColor::Red, 1);
  result.stats = ranker.stats;
  result.trace = std::move(ranker.trace);
  return result;
}

}  // namespace tabprompt
