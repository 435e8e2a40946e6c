#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <sstream>

#include "generators.hpp"
#include "tabprompt/config.hpp"
#include "tabprompt/error.hpp"
#include "tabprompt/mock_oracle.hpp"
#include "tabprompt/pipeline.hpp"

using namespace tabprompt;

namespace {

const std::string kData = TABPROMPT_DATA_DIR;

PipelineConfig fixture_config() { return load_config(kData + "/config.json"); }

std::string build_jsonl(const Pipeline& p) {
  std::ostringstream out;
  write_prompt_records(out, cmd_build(p).records);
  return out.str();
}

std::map<std::string, Prediction> keyed(std::vector<Prediction> preds) {
  std::map<std::string, Prediction> out;
  for (auto& p : preds) out.emplace(p.instance_id, std::move(p));
  return out;
}

Table small_table() {
  return Table{"t", {"Page", "", ""}, {"name", "team"}, {{"A", "X"}, {"B", "Y"}}};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config parsing") {
    auto cfg = parse_config(R"({"seed": 7, "budget": {"model_limit": 4096, "offset": 100},
        "classify": {"subset_size": 8, "pos_neg_ratio": [2, 1]},
        "rank": {"subset_size": 10, "top_k": 5}, "layout": "input-first",
        "backend": {"kind": "mock", "noise": 0.25}})");
    CHECK(cfg.seed == 7u);
    CHECK(cfg.budget.model_limit == 4096);
    CHECK(cfg.budget.offset == 100);
    CHECK(cfg.classify.subset_size == 8);
    CHECK(cfg.classify.pos_ratio == 2);
    CHECK(cfg.classify.neg_ratio == 1);
    CHECK(cfg.rank.top_k == 5u);
    CHECK(cfg.layout == Layout::InputFirst);
    CHECK(cfg.mock_noise == 0.25);
  }

  TEST_CASE("unknown config keys are rejected") {
    try {
      parse_config(R"({"seed": 1, "tabels": "x"})");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("unknown config key 'tabels'") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config(R"({"budget": {"limit": 1}})"), DataError);
    CHECK_THROWS_AS(parse_config("{not json"), DataError);
  }

  TEST_CASE("a seed is required") {
    PipelineConfig cfg;
    CHECK_THROWS_AS(cfg.require_seed(), DataError);
  }

  TEST_CASE("fixture build fits the context window") {
    Pipeline p(fixture_config());
    auto out = cmd_build(p);
    CHECK(out.max_tokens <= 2048);
    CHECK_FALSE(out.records.empty());
    const auto& tok = ReferenceTokenizer::instance();
    for (const auto& r : out.records) {
      CHECK(tok.count(r.assembled) <= 2048);
      CHECK(r.assembled.find("### Response:") != std::string::npos);
      CHECK_FALSE(r.response.empty());
    }
  }

  TEST_CASE("each classification instance expands to 1 Pos and 3 Neg") {
    Pipeline p(fixture_config());
    auto idx = p.find_instance("cta-team");
    REQUIRE(idx.has_value());
    auto built = expand_instance(p, *idx);
    REQUIRE(built.size() == 4);
    CHECK(built[0].record.response == "baseball.baseball_team.");
    for (int i = 1; i < 4; ++i) CHECK(built[i].record.response == "none of the above.");
  }

  TEST_CASE("ranking records only carry chunks with gold items") {
    Pipeline p(fixture_config());
    auto idx = p.find_instance("rp-ecf-year");
    REQUIRE(idx.has_value());
    const auto& inst = p.instances()[*idx];
    auto built = expand_instance(p, *idx);
    REQUIRE_FALSE(built.empty());
    std::size_t golds_seen = 0;
    for (const auto& b : built) {
      CHECK(b.record.response.front() == '<');
      for (const auto& g : inst.gold)
        if (b.record.response.find("<" + g + ">") != std::string::npos) ++golds_seen;
    }
    CHECK(golds_seen == inst.gold.size());
  }

  TEST_CASE("an empty instance file builds nothing") {
    Pipeline p(PipelineConfig{[] {
                 PipelineConfig c;
                 c.seed = 1;
                 return c;
               }()},
               {small_table()}, {}, {});
    auto out = cmd_build(p);
    CHECK(out.records.empty());
    CHECK(build_jsonl(p).empty());
  }

  TEST_CASE("build output is byte-identical for a fixed seed") {
    Pipeline a(fixture_config()), b(fixture_config());
    CHECK(build_jsonl(a) == build_jsonl(b));
    auto cfg = fixture_config();
    cfg.workers = 3;
    Pipeline c(cfg);
    CHECK(build_jsonl(c) == build_jsonl(a));
    cfg.seed = 43;
    Pipeline d(cfg);
    CHECK(build_jsonl(d) != build_jsonl(a));
  }

  TEST_CASE("records are JSON objects with the four fields") {
    Pipeline p(fixture_config());
    std::istringstream in(build_jsonl(p));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      auto obj = nlohmann::json::parse(line);
      REQUIRE(obj.size() == 4);
      for (auto key : {"instruction", "input", "question", "response"}) CHECK(obj.contains(key));
      ++n;
    }
    CHECK(n == cmd_build(p).records.size());
  }

  TEST_CASE("perfect mock scores 1 on every task") {
    Pipeline p(fixture_config());
    auto report = cmd_eval(p, keyed(predict_all(p, OracleProvider::from_config(p.config()))));
    REQUIRE(report.tasks.size() == 8);
    for (const auto& [task, m] : report.tasks) {
      INFO(task_name(task));
      if (m.micro_f1) CHECK(*m.micro_f1 == 1.0);
      if (m.accuracy) CHECK(*m.accuracy == 1.0);
      if (m.map) CHECK(*m.map == 1.0);
    }
    CHECK(report.warnings.empty());
    CHECK(report.ranking_breakdown.size() == 2);
  }

  TEST_CASE("scrambled predictions score below 1") {
    Pipeline p(fixture_config());
    auto preds = keyed(predict_all(p, OracleProvider::from_config(p.config())));
    auto& rp = preds.at("rp-ecf-year").labels;
    std::reverse(rp.begin(), rp.end());
    preds.at("cta-player").labels = {"people.person"};
    preds.at("tabfact-lema").answer = "refuted";
    preds.erase("hitab-air-force");
    auto report = cmd_eval(p, preds);
    CHECK(*report.tasks.at(Task::RowPopulation).map < 1.0);
    CHECK(*report.tasks.at(Task::ColumnTypeAnnotation).recall < 1.0);
    CHECK(*report.tasks.at(Task::ColumnTypeAnnotation).precision == 1.0);
    CHECK(*report.tasks.at(Task::FactVerification).accuracy == 0.0);
    CHECK(*report.tasks.at(Task::HierarchicalQa).accuracy == 0.0);
    CHECK(report.warnings.at("missing_prediction") == 1);
  }

  TEST_CASE("noisy ranking reports a per-instance breakdown") {
    auto cfg = fixture_config();
    cfg.mock_noise = 0.5;
    Pipeline p(cfg);
    auto report = cmd_eval(p, keyed(predict_all(p, OracleProvider::from_config(cfg))));
    REQUIRE(report.ranking_breakdown.size() == 2);
    for (const auto& s : report.ranking_breakdown) {
      CHECK(s.value > 0.0);
      CHECK(s.value <= 1.0);
    }
  }

  TEST_CASE("predictions for unknown instances are rejected") {
    Pipeline p(fixture_config());
    std::map<std::string, Prediction> preds;
    preds["ghost"] = Prediction{"ghost", Task::FactVerification, {}, "entailed", 0};
    CHECK_THROWS_AS(cmd_eval(p, preds), DataError);
  }

  TEST_CASE("prediction files") {
    std::istringstream in(
        R"({"instance_id":"a","predicted":["x"]})"
        "\n"
        R"({"instance_id":"b","ranking":["p","q"]})"
        "\n"
        R"({"instance_id":"c","answer":"yes"})"
        "\n");
    auto preds = load_predictions(in);
    CHECK(preds.at("a").labels == std::vector<std::string>{"x"});
    CHECK(preds.at("b").labels.size() == 2);
    CHECK(preds.at("c").answer == "yes");
    std::istringstream dup(R"({"instance_id":"a","answer":"1"})"
                           "\n"
                           R"({"instance_id":"a","answer":"2"})");
    CHECK_THROWS_AS(load_predictions(dup), DataError);
  }

  TEST_CASE("instances naming unknown tables or tasks are data errors") {
    PipelineConfig cfg;
    cfg.seed = 1;
    TaskInstance orphan{"o", Task::FactVerification, "nope", StatementKey{"s"}, {}, {}, {"entailed"}};
    CHECK_THROWS_AS(Pipeline(cfg, {small_table()}, {orphan}, {}), DataError);
    std::istringstream bad(R"({"task":"mystery","table_id":"t","key":{},"gold":["x"]})");
    CHECK_THROWS_AS(load_instances(bad), DataError);
    TaskInstance cta{"c", Task::ColumnTypeAnnotation, "t", ColumnKey{0}, {}, {}, {"x"}};
    CHECK_THROWS_AS(Pipeline(cfg, {small_table()}, {cta}, {}), DataError);
  }

  TEST_CASE("unsegmentable tables are listed by id") {
    auto cfg = fixture_config();
    cfg.budget.model_limit = 760;
    Pipeline p(cfg);
    try {
      cmd_build(p);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("a-league-attendance") != std::string::npos);
    }
  }

  TEST_CASE("rank requests") {
    auto cfg = fixture_config();
    std::istringstream in(R"({"instance_id":"q1","candidates":["a","b","c","d"],"gold":["c","a"]})");
    auto reqs = load_rank_requests(in);
    auto preds = cmd_rank(reqs, cfg, OracleProvider::from_config(cfg));
    REQUIRE(preds.size() == 1);
    CHECK(preds[0].labels == std::vector<std::string>{"c", "a", "b", "d"});
    CHECK(preds[0].oracle_calls == 1);
    cfg.rank.top_k = 2;
    CHECK(cmd_rank(reqs, cfg, OracleProvider::from_config(cfg))[0].labels.size() == 2);
  }

  TEST_CASE("classify command covers the classification instances") {
    Pipeline p(fixture_config());
    auto preds = cmd_classify(p, OracleProvider::from_config(p.config()));
    CHECK(preds.size() == 4);
    for (const auto& pr : preds) CHECK_FALSE(pr.labels.empty());
  }

  TEST_CASE("inspect shows the assembled prompt") {
    Pipeline p(fixture_config());
    auto text = cmd_inspect(p, "tabfact-lema");
    CHECK(text.find("instance  tabfact-lema") != std::string::npos);
    CHECK(text.find("### Question:\nThe statement is: <") != std::string::npos);
    CHECK(text.find("entailed.") != std::string::npos);
    CHECK_THROWS_AS(cmd_inspect(p, "missing"), DataError);
    CHECK_THROWS_AS(cmd_inspect(p, "tabfact-lema", 3), DataError);
  }

  TEST_CASE("random instances of every task build within budget") {
    SplitMix64 rng(5);
    std::vector<Table> tables;
    std::vector<TaskInstance> insts;
    auto labels = testing::numbered("type", 40);
    auto pool = testing::numbered("cand", 45);
    for (int i = 0; i < 24; ++i) {
      tables.push_back(testing::sized_table(rng, "s" + std::to_string(i), 100 + rng.below(4000)));
      const Task task = kAllTasks[i % kAllTasks.size()];
      insts.push_back(testing::random_instance(rng, task, tables.back(), "i" + std::to_string(i),
                                               labels, pool));
    }
    std::map<Task, LabelSpace> spaces;
    spaces.emplace(Task::ColumnTypeAnnotation, LabelSpace(labels));
    spaces.emplace(Task::RelationExtraction, LabelSpace(labels));
    PipelineConfig cfg;
    cfg.seed = 9;
    Pipeline p(cfg, tables, insts, std::move(spaces));
    auto out = cmd_build(p);
    CHECK(out.max_tokens <= 2048);
  }
}
