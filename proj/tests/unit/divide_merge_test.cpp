#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <functional>
#include <set>

#include "generators.hpp"
#include "tabprompt/divide_merge.hpp"
#include "tabprompt/mock_oracle.hpp"

using namespace tabprompt;

namespace {

// Answers each subset request through a test-supplied function.
class ScriptedBackend final : public OracleBackend {
 public:
  using Fn = std::function<std::string(const CompletionRequest&)>;
  explicit ScriptedBackend(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(const CompletionRequest& req) override {
    ++calls;
    return fn_(req);
  }
  std::vector<std::string> rank(std::span<const std::string> items, std::string_view) override {
    return {items.begin(), items.end()};
  }
  std::atomic<std::size_t> calls{0};

 private:
  Fn fn_;
};

std::string no_prompt(const TaskInstance&, std::span<const std::string>) { return {}; }

TaskInstance cta(std::vector<std::string> gold, std::string id = "i") {
  return TaskInstance{std::move(id), Task::ColumnTypeAnnotation, "t", ColumnKey{0}, {}, {},
                      std::move(gold)};
}

MockOracle perfect(const std::string& id, std::vector<std::string> gold) {
  MockOracle::Options o;
  o.gold[id] = std::move(gold);
  return MockOracle(std::move(o));
}

}  // namespace

TEST_SUITE("classify-dnm") {
  TEST_CASE("255 labels in subsets of 10") {
    LabelSpace space(testing::numbered("L", 255));
    auto subsets = divide_labels(space, 10);
    REQUIRE(subsets.size() == 26);
    for (std::size_t i = 0; i < 25; ++i) CHECK(subsets[i].size() == 11);
    CHECK(subsets[25].size() == 6);
    for (const auto& s : subsets) CHECK(s.back() == "none of the above");
    // Order is preserved across the concatenation.
    std::vector<std::string> flat;
    for (const auto& s : subsets) flat.insert(flat.end(), s.begin(), s.end() - 1);
    CHECK(flat == space.labels());
  }

  TEST_CASE("small spaces") {
    CHECK(divide_labels(LabelSpace(testing::numbered("L", 10)), 10).size() == 1);
    CHECK(divide_labels(LabelSpace(testing::numbered("L", 10)), 10)[0].size() == 11);
    auto one = divide_labels(LabelSpace({"only"}), 10);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == std::vector<std::string>{"only", "none of the above"});
  }

  TEST_CASE("label space rejects bad input") {
    CHECK_THROWS_AS(LabelSpace({}), DataError);
    CHECK_THROWS_AS(LabelSpace({"a", "a"}), DataError);
    CHECK_THROWS_AS(LabelSpace({"a", "none of the above"}), DataError);
  }

  TEST_CASE("merge is the union of subset answers in label order") {
    LabelSpace space({"a", "b", "c", "d", "e"});
    ScriptedBackend backend([](const CompletionRequest& req) -> std::string {
      if (req.options.front() == "a") return "b, none of the above.";
      if (req.options.front() == "c") return "D, c, martian.";
      return "none of the above.";
    });
    ClassifyConfig cfg;
    cfg.subset_size = 2;
    auto r = classify_instance(cta({"b"}), space, cfg, backend, no_prompt);
    CHECK(r.labels == std::vector<std::string>{"b", "c", "d"});
    CHECK(r.backend_calls == 3);
    CHECK(r.unmatched_fragments == 1);
  }

  TEST_CASE("all-NOTA answers give an empty prediction") {
    LabelSpace space(testing::numbered("L", 30));
    ScriptedBackend backend([](const CompletionRequest&) { return std::string("none of the above."); });
    auto r = classify_instance(cta({"L3"}), space, ClassifyConfig{}, backend, no_prompt);
    CHECK(r.labels.empty());
    CHECK(r.backend_calls == 3);
  }

  TEST_CASE("perfect mock recovers the gold set") {
    SplitMix64 rng(17);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t n = 1 + rng.below(500);
      LabelSpace space(testing::numbered("lab", n));
      std::set<std::string> gold_set;
      const std::size_t k = 1 + rng.below(std::min<std::size_t>(n, 6));
      while (gold_set.size() < k) gold_set.insert(space.labels()[rng.below(n)]);
      std::vector<std::string> gold(gold_set.begin(), gold_set.end());
      auto mock = perfect("i", gold);
      ClassifyConfig cfg;
      cfg.subset_size = 2 + rng.below(20);
      auto r = classify_instance(cta(gold), space, cfg, mock, no_prompt);
      std::sort(gold.begin(), gold.end(), [&](auto& a, auto& b) {
        return space.index_of(a) < space.index_of(b);
      });
      REQUIRE(r.labels == gold);
      CHECK(r.backend_calls == (n + cfg.subset_size - 1) / cfg.subset_size);
    }
  }

  TEST_CASE("entity linking runoff narrows several survivors to one") {
    LabelSpace space({"<a>", "<b>", "<c>", "<d>"});
    // First round: every subset claims its first option; runoff rounds
    // answer honestly with "<c>".
    std::atomic<int> round_calls{0};
    ScriptedBackend backend([&](const CompletionRequest& req) -> std::string {
      ++round_calls;
      if (req.options.size() == 3 && round_calls <= 2) return req.options.front() + ".";
      auto has_c = std::find(req.options.begin(), req.options.end(), "<c>") != req.options.end();
      return has_c ? "<c>." : "none of the above.";
    });
    TaskInstance el{"e", Task::EntityLinking, "t", MentionKey{"m", {0, 0}}, {}, space.labels(),
                    {"<c>"}};
    ClassifyConfig cfg;
    cfg.subset_size = 2;
    auto r = classify_instance(el, space, cfg, backend, no_prompt);
    CHECK(r.labels == std::vector<std::string>{"<c>"});
    CHECK(r.runoff_rounds_used == 1);
  }

  TEST_CASE("runoff that never converges keeps the first survivor in label order") {
    LabelSpace space({"x", "y", "z"});
    ScriptedBackend backend([](const CompletionRequest& req) {
      std::vector<std::string> opts(req.options.begin(), req.options.end() - 1);
      return format_label_response(opts, false);
    });
    TaskInstance el{"e", Task::EntityLinking, "t", MentionKey{"m", {0, 0}}, {}, {}, {"z"}};
    ClassifyConfig cfg;
    cfg.subset_size = 2;
    auto r = classify_instance(el, space, cfg, backend, no_prompt);
    CHECK(r.labels == std::vector<std::string>{"x"});
    CHECK(r.runoff_rounds_used == cfg.runoff_rounds);
  }

  TEST_CASE("training plan: one positive subset, 1:3") {
    LabelSpace space(testing::numbered("L", 255));
    ClassifyConfig cfg;
    cfg.seed = 5;
    auto plan = plan_cls_training(cta({"L42"}), space, cfg, 0);
    REQUIRE(plan.samples.size() == 4);
    CHECK(plan.samples[0].is_pos());
    CHECK(plan.samples[0].subset_index == 4);
    CHECK(plan.samples[0].positives == std::vector<std::string>{"L42"});
    std::set<std::size_t> negs;
    for (std::size_t i = 1; i < 4; ++i) {
      CHECK_FALSE(plan.samples[i].is_pos());
      CHECK(plan.samples[i].subset_index != 4);
      negs.insert(plan.samples[i].subset_index);
    }
    CHECK(negs.size() == 3);
    CHECK(cls_response(plan.samples[0], space, false) == "L42.");
    CHECK(cls_response(plan.samples[1], space, false) == "none of the above.");
  }

  TEST_CASE("training plan: 1:0 keeps only positives") {
    LabelSpace space(testing::numbered("L", 255));
    ClassifyConfig cfg;
    cfg.neg_ratio = 0;
    auto plan = plan_cls_training(cta({"L0", "L250"}), space, cfg, 0);
    REQUIRE(plan.samples.size() == 2);
    CHECK(plan.samples[0].subset_index == 0);
    CHECK(plan.samples[1].subset_index == 25);
  }

  TEST_CASE("training plan: golds in two subsets give 2 Pos and 6 Neg") {
    LabelSpace space(testing::numbered("L", 255));
    auto plan = plan_cls_training(cta({"L1", "L2", "L99"}), space, ClassifyConfig{}, 3);
    std::size_t pos = 0, neg = 0;
    for (const auto& s : plan.samples) (s.is_pos() ? pos : neg)++;
    CHECK(pos == 2);
    CHECK(neg == 6);
    CHECK(plan.samples[0].positives == std::vector<std::string>{"L1", "L2"});
    CHECK(cls_response(plan.samples[0], space, true) == "<L1>, <L2>.");
  }

  TEST_CASE("training plan with too few negatives warns") {
    LabelSpace space(testing::numbered("L", 20));
    auto plan = plan_cls_training(cta({"L1"}), space, ClassifyConfig{}, 0);
    CHECK(plan.samples.size() == 2);
    CHECK(plan.warnings.size() == 1);
  }

  TEST_CASE("training plan errors") {
    LabelSpace space(testing::numbered("L", 20));
    CHECK_THROWS_AS(plan_cls_training(cta({"nope"}), space, ClassifyConfig{}, 0), DataError);
    TaskInstance el{"e", Task::EntityLinking, "t", MentionKey{"m", {0, 0}}, {}, {}, {"L1", "L2"}};
    CHECK_THROWS_AS(plan_cls_training(el, space, ClassifyConfig{}, 0), DataError);
  }

  TEST_CASE("plans are deterministic and the seed only moves negatives") {
    LabelSpace space(testing::numbered("L", 255));
    ClassifyConfig a, b;
    a.seed = 1;
    b.seed = 2;
    auto inst = cta({"L7", "L130"});
    auto p1 = plan_cls_training(inst, space, a, 9);
    auto p2 = plan_cls_training(inst, space, a, 9);
    REQUIRE(p1.samples.size() == p2.samples.size());
    for (std::size_t i = 0; i < p1.samples.size(); ++i)
      CHECK(p1.samples[i].subset_index == p2.samples[i].subset_index);

    bool negs_differ = false;
    for (int stream = 0; stream < 10 && !negs_differ; ++stream) {
      auto q1 = plan_cls_training(inst, space, a, stream);
      auto q2 = plan_cls_training(inst, space, b, stream);
      REQUIRE(q1.samples.size() == q2.samples.size());
      for (std::size_t i = 0; i < 2; ++i) {
        CHECK(q1.samples[i].subset_index == q2.samples[i].subset_index);
        CHECK(q1.samples[i].positives == q2.samples[i].positives);
      }
      for (std::size_t i = 2; i < q1.samples.size(); ++i)
        negs_differ |= q1.samples[i].subset_index != q2.samples[i].subset_index;
    }
    CHECK(negs_differ);
  }

  TEST_CASE("build_cls_training emits one record per sample") {
    LabelSpace space(testing::numbered("L", 255));
    std::vector<TaskInstance> insts{cta({"L1"}, "a"), cta({"L1", "L200"}, "b")};
    auto out = build_cls_training(
        insts, [&](const TaskInstance&) -> const LabelSpace& { return space; }, ClassifyConfig{},
        [](const TaskInstance& inst, std::span<const std::string> subset) {
          return PromptRecord{inst.id, "", subset.front(), "", ""};
        });
    REQUIRE(out.records.size() == 4 + 8);
    CHECK(out.records[0].response == "L1.");
    CHECK(out.records[1].response == "none of the above.");
  }

  TEST_CASE("a failing subset aborts with the completed subsets listed") {
    LabelSpace space(testing::numbered("L", 40));
    ScriptedBackend backend([](const CompletionRequest& req) -> std::string {
      if (req.options.front() == "L20") throw BackendError("boom", 503);
      return "none of the above.";
    });
    ClassifyConfig cfg;
    try {
      classify_instance(cta({"L1"}), space, cfg, backend, no_prompt);
      FAIL("expected ClassifyError");
    } catch (const ClassifyError& e) {
      CHECK(e.completed_subsets() == std::vector<std::size_t>{0, 1});
      CHECK(std::string(e.what()).find("subset 2") != std::string::npos);
    }
  }

  TEST_CASE("parallel subset queries merge the same way") {
    LabelSpace space(testing::numbered("L", 97));
    std::vector<std::string> gold{"L3", "L50", "L96"};
    auto mock = perfect("i", gold);
    ClassifyConfig cfg;
    cfg.max_in_flight = 4;
    auto r = classify_instance(cta(gold), space, cfg, mock, no_prompt);
    CHECK(r.labels == gold);
  }
}
