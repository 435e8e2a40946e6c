#include <benchmark/benchmark.h>

#include "generators.hpp"
#include "tabprompt/mock_oracle.hpp"
#include "tabprompt/tree_rank.hpp"

using namespace tabprompt;

static void BM_TreeRank(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto cands = testing::numbered("c", n);
  MockOracle::Options o;
  for (std::size_t i = 0; i < n; ++i) o.relevance[cands[i]] = double(n - i);
  o.noise = 0.1;
  MockOracle mock(o);
  RankConfig cfg;
  std::size_t calls = 0;
  for (auto _ : state) {
    cfg.seed += 1;
    auto r = tree_rank(cands, cfg, mock);
    calls = r.stats.oracle_calls;
    benchmark::DoNotOptimize(r.ranking.data());
  }
  state.counters["oracle_calls"] = static_cast<double>(calls);
}
BENCHMARK(BM_TreeRank)->Arg(40)->Arg(200)->Arg(1000)->Arg(5000);
