#include <benchmark/benchmark.h>

#include "generators.hpp"
#include "tabprompt/pipeline.hpp"

using namespace tabprompt;

// End-to-end prompt building over range(0) generated tables, one instance
// each, cycling through the eight tasks.
static void BM_BuildCorpus(benchmark::State& state) {
  SplitMix64 rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  auto types = testing::numbered("type.t", 255);
  auto relations = testing::numbered("rel.r", 121);
  auto pool = testing::numbered("cand", 60);
  std::vector<Table> tables;
  std::vector<TaskInstance> insts;
  for (std::size_t i = 0; i < n; ++i) {
    tables.push_back(testing::sized_table(rng, "t" + std::to_string(i), 1 + rng.below(10000)));
    const Task task = kAllTasks[i % kAllTasks.size()];
    insts.push_back(testing::random_instance(
        rng, task, tables.back(), "i" + std::to_string(i),
        task == Task::RelationExtraction ? relations : types, pool));
  }
  std::map<Task, LabelSpace> spaces;
  spaces.emplace(Task::ColumnTypeAnnotation, LabelSpace(types));
  spaces.emplace(Task::RelationExtraction, LabelSpace(relations));
  PipelineConfig cfg;
  cfg.seed = 1;
  Pipeline pipeline(cfg, tables, insts, spaces);
  std::size_t records = 0;
  for (auto _ : state) {
    auto out = cmd_build(pipeline);
    records = out.records.size();
    benchmark::DoNotOptimize(out.records.data());
  }
  state.counters["records"] = static_cast<double>(records);
}
BENCHMARK(BM_BuildCorpus)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);
