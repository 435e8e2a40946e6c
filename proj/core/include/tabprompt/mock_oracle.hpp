#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabprompt/backend.hpp"

namespace tabprompt {

/// Sorts `items` by descending score (stable, so ties keep input order),
/// then walks i = 0..n-2 swapping positions i and i+1 with probability
/// `noise`, drawing from a splitmix64 stream seeded with `seed`.
/// Throws DataError if an item has no score.
std::vector<std::string> mock_rank(std::span<const std::string> items,
                                   const std::map<std::string, double, std::less<>>& relevance,
                                   double noise, std::uint64_t seed);

/// In-process stand-in for a model.
///
/// complete(): with request.options set, answers with the instance's gold
/// labels found among the options (or "none of the above." when none are),
/// formatted like a training response. Without options it returns the
/// joined gold answer. In AlwaysNota mode every option request is answered
/// "none of the above.".
///
/// rank(): mock_rank over `relevance`; the noise stream for each call is
/// keyed by the call's items so results do not depend on call order.
class MockOracle final : public OracleBackend {
 public:
  enum class Mode { EchoGold, AlwaysNota };

  struct Options {
    std::map<std::string, std::vector<std::string>, std::less<>> gold;
    std::map<std::string, double, std::less<>> relevance;
    double noise = 0.0;
    std::uint64_t seed = 0;
    Mode mode = Mode::EchoGold;
    std::string nota_token = "none of the above";
  };

  explicit MockOracle(Options options);

  std::string complete(const CompletionRequest& request) override;
  std::vector<std::string> rank(std::span<const std::string> items,
                                std::string_view context) override;

  std::size_t complete_calls() const noexcept { return complete_calls_.load(); }
  std::size_t rank_calls() const noexcept { return rank_calls_.load(); }

 private:
  Options options_;
  std::atomic<std::size_t> complete_calls_{0};
  std::atomic<std::size_t> rank_calls_{0};
};

}  // namespace tabprompt
