#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "generators.hpp"
#include "tabprompt/error.hpp"
#include "tabprompt/mock_oracle.hpp"
#include "tabprompt/tree_rank.hpp"

using namespace tabprompt;

namespace {

using Items = std::vector<std::string>;

// Perfect comparator: sorts by a hidden relevance score, highest first.
class ScoreOracle final : public OracleBackend {
 public:
  explicit ScoreOracle(std::map<std::string, double> scores) : scores_(std::move(scores)) {}
  std::string complete(const CompletionRequest&) override { return {}; }
  std::vector<std::string> rank(std::span<const std::string> items, std::string_view) override {
    ++calls;
    Items out(items.begin(), items.end());
    std::stable_sort(out.begin(), out.end(),
                     [&](const auto& a, const auto& b) { return scores_.at(a) > scores_.at(b); });
    return out;
  }
  std::size_t calls = 0;

 private:
  std::map<std::string, double> scores_;
};

// Returns a seeded arbitrary permutation of every node.
class ChaosOracle final : public OracleBackend {
 public:
  explicit ChaosOracle(std::uint64_t seed) : rng_(seed) {}
  std::string complete(const CompletionRequest&) override { return {}; }
  std::vector<std::string> rank(std::span<const std::string> items, std::string_view) override {
    Items out(items.begin(), items.end());
    fisher_yates_shuffle(std::span<std::string>(out), rng_);
    return out;
  }

 private:
  SplitMix64 rng_;
};

class BrokenOracle final : public OracleBackend {
 public:
  std::string complete(const CompletionRequest&) override { return {}; }
  std::vector<std::string> rank(std::span<const std::string> items, std::string_view) override {
    Items out(items.begin(), items.end());
    out.pop_back();
    return out;
  }
};

// c0 is the most relevant, c{n-1} the least.
std::map<std::string, double> descending(std::size_t n) {
  std::map<std::string, double> scores;
  for (std::size_t i = 0; i < n; ++i) scores["c" + std::to_string(i)] = double(n - i);
  return scores;
}

std::size_t ceil_log2(std::size_t n) {
  std::size_t l = 0;
  while ((std::size_t{1} << l) < n) ++l;
  return l;
}

}  // namespace

TEST_SUITE("tree-rank") {
  TEST_CASE("a pool that fits one node takes one call") {
    auto cands = testing::numbered("c", 15);
    std::reverse(cands.begin(), cands.end());
    ScoreOracle oracle(descending(15));
    RankConfig cfg;
    auto r = tree_rank(cands, cfg, oracle);
    CHECK(r.stats.oracle_calls == 1);
    CHECK(oracle.calls == 1);
    CHECK(r.ranking == testing::numbered("c", 15));
  }

  TEST_CASE("40 candidates keep the true top 10 in front and in order") {
    auto cands = testing::numbered("c", 40);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      ScoreOracle oracle(descending(40));
      RankConfig cfg;
      cfg.seed = seed;
      auto r = tree_rank(cands, cfg, oracle);
      REQUIRE(r.ranking.size() == 40);
      for (std::size_t i = 0; i < 10; ++i) REQUIRE(r.ranking[i] == "c" + std::to_string(i));
    }
  }

  TEST_CASE("three subsets take three layers") {
    ScoreOracle oracle(descending(60));
    RankConfig cfg;
    cfg.seed = 3;
    cfg.record_trace = true;
    auto r = tree_rank(testing::numbered("c", 60), cfg, oracle);
    CHECK(r.stats.subsets == 3);
    CHECK(r.stats.layers == 3);
    CHECK(r.stats.layers == ceil_log2(3) + 1);
    // Layer 1 ranks the three subsets; layer 2 ranks the merged red node.
    REQUIRE(r.trace.size() >= 4);
    for (int i = 0; i < 3; ++i) CHECK(r.trace[i].origin_layer == 1);
    CHECK(r.trace[3].origin_layer == 2);
    CHECK(r.trace[3].color == NodeColor::Red);
    CHECK(r.trace[3].items.size() == 20);
  }

  TEST_CASE("split_halves") {
    CHECK(split_halves(Items{"a", "b", "c", "d"}).red == Items{"a", "b"});
    CHECK(split_halves(Items{"a", "b", "c", "d"}).blue == Items{"c", "d"});
    CHECK(split_halves(Items{"a", "b", "c"}).red == Items{"a", "b"});
    CHECK(split_halves(Items{"a", "b", "c"}).blue == Items{"c"});
    CHECK(split_halves(Items{"a"}).red == Items{"a"});
    CHECK(split_halves(Items{"a"}).blue.empty());
    CHECK(split_halves(Items{"a", "b", "c"}, 10).red == Items{"a", "b", "c"});
    CHECK(split_halves(Items{"a", "b", "c"}, 1).blue == Items{"b", "c"});
  }

  TEST_CASE("pair_merge") {
    Items h1{"1"}, h2{"2"}, h3{"3"}, hc{"c"};
    auto a = pair_merge({h1, h2, h3}, std::nullopt);
    CHECK(a.full_nodes == std::vector<Items>{{"1", "2"}});
    CHECK(a.carry == Items{"3"});
    auto b = pair_merge({h1}, hc);
    CHECK(b.full_nodes == std::vector<Items>{{"1", "c"}});
    CHECK_FALSE(b.carry.has_value());
    auto c = pair_merge({h1, h2}, std::nullopt);
    CHECK(c.full_nodes == std::vector<Items>{{"1", "2"}});
    CHECK_FALSE(c.carry.has_value());
  }

  TEST_CASE("output is a permutation under arbitrary oracles") {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng.below(250);
      auto cands = testing::numbered("x", n);
      ChaosOracle oracle(rng.next());
      RankConfig cfg;
      cfg.subset_size = 2 * (1 + rng.below(12));
      cfg.seed = rng.next();
      auto r = tree_rank(cands, cfg, oracle);
      auto sorted = r.ranking;
      std::sort(sorted.begin(), sorted.end());
      auto expect = cands;
      std::sort(expect.begin(), expect.end());
      REQUIRE(sorted == expect);
    }
  }

  TEST_CASE("top-k lands in the first S for S = 10 and 20") {
    for (std::size_t s : {10u, 20u}) {
      for (std::size_t n : {40u, 77u, 120u, 200u}) {
        for (std::uint64_t seed = 0; seed < 40; ++seed) {
          ScoreOracle oracle(descending(n));
          RankConfig cfg;
          cfg.subset_size = s;
          cfg.seed = seed;
          auto r = tree_rank(testing::numbered("c", n), cfg, oracle);
          std::set<std::string> head(r.ranking.begin(), r.ranking.begin() + s);
          for (std::size_t i = 0; i < s / 2; ++i) {
            REQUIRE(head.count("c" + std::to_string(i)) == 1);
            REQUIRE(r.ranking[i] == "c" + std::to_string(i));
          }
        }
      }
    }
  }

  TEST_CASE("same inputs give the same ranking and call count") {
    auto cands = testing::numbered("c", 137);
    MockOracle::Options o;
    for (std::size_t i = 0; i < 137; ++i) o.relevance["c" + std::to_string(i)] = double(i % 13);
    o.noise = 0.2;
    o.seed = 4;
    RankConfig cfg;
    cfg.seed = 8;
    MockOracle m1(o), m2(o);
    auto a = tree_rank(cands, cfg, m1);
    auto b = tree_rank(cands, cfg, m2);
    CHECK(a.ranking == b.ranking);
    CHECK(a.stats.oracle_calls == b.stats.oracle_calls);
    cfg.max_in_flight = 4;
    MockOracle m3(o);
    auto c = tree_rank(cands, cfg, m3);
    CHECK(c.ranking == a.ranking);
  }

  TEST_CASE("calls stay within 2 n (ceil log2 n + 1)") {
    for (std::size_t n_items : {21u, 40u, 60u, 100u, 200u, 333u, 1000u}) {
      ScoreOracle oracle(descending(n_items));
      RankConfig cfg;
      cfg.seed = n_items;
      auto r = tree_rank(testing::numbered("c", n_items), cfg, oracle);
      const std::size_t n = (n_items + 19) / 20;
      CHECK(r.stats.oracle_calls == oracle.calls);
      CHECK(r.stats.oracle_calls <= 2 * n * (ceil_log2(n) + 1));
    }
  }

  TEST_CASE("shuffle is seeded Fisher-Yates") {
    // With an identity oracle the first node is exactly the first S shuffled items.
    class Identity final : public OracleBackend {
     public:
      std::string complete(const CompletionRequest&) override { return {}; }
      std::vector<std::string> rank(std::span<const std::string> items, std::string_view) override {
        return {items.begin(), items.end()};
      }
    } identity;
    auto cands = testing::numbered("c", 45);
    RankConfig cfg;
    cfg.seed = 1234;
    cfg.record_trace = true;
    auto r = tree_rank(cands, cfg, identity);
    auto expect = cands;
    SplitMix64 rng(1234);
    for (std::size_t i = expect.size() - 1; i > 0; --i)
      std::swap(expect[i], expect[rng.next() % (i + 1)]);
    REQUIRE_FALSE(r.trace.empty());
    CHECK(r.trace[0].items == Items(expect.begin(), expect.begin() + 20));
    CHECK(r.stats.shuffle_seed == 1234);
  }

  TEST_CASE("errors") {
    ScoreOracle oracle(descending(3));
    CHECK_THROWS_AS(tree_rank(Items{}, RankConfig{}, oracle), DataError);
    CHECK_THROWS_AS(tree_rank(Items{"c0", "c0"}, RankConfig{}, oracle), DataError);
    RankConfig odd;
    odd.subset_size = 5;
    CHECK_THROWS_AS(tree_rank(Items{"c0"}, odd, oracle), DataError);
    BrokenOracle broken;
    try {
      tree_rank(testing::numbered("c", 30), RankConfig{}, broken);
      FAIL("expected BackendError");
    } catch (const BackendError& e) {
      CHECK(std::string(e.what()).find("non-permutation") != std::string::npos);
    }
  }
}
