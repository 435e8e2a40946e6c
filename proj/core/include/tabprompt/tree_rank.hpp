#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabprompt/backend.hpp"

namespace tabprompt {

struct RankConfig {
  /// Node capacity S (items per oracle call). Even, >= 2.
  std::size_t subset_size = 20;
  std::optional<std::size_t> top_k;
  std::uint64_t seed = 0;
  /// Concurrent rank calls within one layer (1 = sequential).
  std::size_t max_in_flight = 1;
  /// Keep every ranked node in RankResult::trace.
  bool record_trace = false;

  void validate(std::size_t candidate_count) const;
};

enum class NodeColor { Red, Blue };

/// A node handed to the oracle: at most S items. `color` is the half its
/// lineage descends from (first-layer subsets count as red).
struct RankNode {
  std::vector<std::string> items;
  NodeColor color = NodeColor::Red;
  std::size_t origin_layer = 1;
};

struct RankStats {
  std::size_t oracle_calls = 0;
  /// Deepest layer at which a rank call happened.
  std::size_t layers = 0;
  std::uint64_t shuffle_seed = 0;
  /// Number of first-layer subsets.
  std::size_t subsets = 0;
};

struct RankResult {
  /// Total order over every candidate, best first.
  std::vector<std::string> ranking;
  RankStats stats;
  /// Ranked nodes in call order (items as returned by the oracle), when
  /// cfg.record_trace is set.
  std::vector<RankNode> trace;
};

struct Halves {
  std::vector<std::string> red;
  std::vector<std::string> blue;
};

/// red = first ceil(len / 2) items, blue = the rest.
Halves split_halves(std::span<const std::string> ranked_items);

/// red = first min(len, red_capacity) items, blue = the rest. With
/// red_capacity = S/2 a full node splits evenly and a short node keeps all
/// of its items red.
Halves split_halves(std::span<const std::string> ranked_items, std::size_t red_capacity);

struct PairMerge {
  std::vector<std::vector<std::string>> full_nodes;
  std::optional<std::vector<std::string>> carry;
};

/// Appends `carry` (if any) after `halves`, drops empty halves, then
/// concatenates consecutive pairs higher-priority first. An unpaired last
/// half becomes the new carry.
PairMerge pair_merge(std::vector<std::vector<std::string>> halves,
                     std::optional<std::vector<std::string>> carry);

/// Builds the prompt for one node (used by text-based backends).
using NodePromptFn = std::function<std::string(std::span<const std::string> items)>;

/// Tournament ranking of a candidate pool larger than one prompt can hold.
///
/// Pools of at most S items take a single oracle call. Larger pools are
/// shuffled (Fisher-Yates over splitmix64(cfg.seed)) and cut into
/// ceil(|pool| / S) subsets. Each lineage ranks its nodes, splits every
/// ranked node into a red top half of up to S/2 items and a blue remainder,
/// pair-merges reds and blues separately (an odd half carries to the next
/// layer of the same color), and recurses on the red lineage before the blue
/// one. The output is the red lineage's order followed by the blue's.
///
/// Throws DataError for empty input or duplicates and BackendError when the
/// oracle returns something other than a permutation of a node.
RankResult tree_rank(std::span<const std::string> candidates, const RankConfig& cfg,
                     OracleBackend& oracle, const NodePromptFn& prompt = {});

}  // namespace tabprompt
