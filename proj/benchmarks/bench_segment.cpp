#include <benchmark/benchmark.h>

#include "generators.hpp"
#include "tabprompt/segmenter.hpp"

using namespace tabprompt;

// Segmenting one table of roughly range(0) tokens under the entity-linking budget.
static void BM_SegmentTable(benchmark::State& state) {
  SplitMix64 rng(1);
  auto table = testing::sized_table(rng, "t", static_cast<std::size_t>(state.range(0)));
  const auto& tok = ReferenceTokenizer::instance();
  std::size_t subtables = 0;
  for (auto _ : state) {
    auto subs = segment_table(table, 1288, 200, tok);
    subtables = subs.size();
    benchmark::DoNotOptimize(subs.data());
  }
  state.counters["subtables"] = static_cast<double>(subtables);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(table.row_count()));
}
BENCHMARK(BM_SegmentTable)->Arg(1000)->Arg(10000)->Arg(100000);

static void BM_CountTokens(benchmark::State& state) {
  SplitMix64 rng(2);
  auto table = testing::sized_table(rng, "t", 10000);
  const auto text = serialize_rows(table.headers, table.rows, 0);
  const auto& tok = ReferenceTokenizer::instance();
  for (auto _ : state) benchmark::DoNotOptimize(tok.count(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_CountTokens);
