#include <doctest.h>

#include <numeric>
#include <string>

#include "generators.hpp"
#include "tabprompt/error.hpp"
#include "tabprompt/segmenter.hpp"
#include "tabprompt/serializer.hpp"

using namespace tabprompt;

namespace {

const Tokenizer& tok() { return ReferenceTokenizer::instance(); }

// One column, `n` rows; each row fragment is exactly 100 tokens and the
// header line "[TAB] col: | h |" is 8.
Table hundred_token_rows(std::size_t n) {
  Table t{"wide", {}, {"h"}, {}};
  for (std::size_t r = 0; r < n; ++r) {
    std::string cell;
    for (int w = 0; w < 92; ++w) cell += (w ? " w" : "w");
    t.rows.push_back({cell});
  }
  return t;
}

// Checks coverage, overlap and budget against an independently measured
// cost of every row.
void check_segmentation(const Table& t, const std::vector<Subtable>& subs, std::size_t allowed,
                        std::size_t offset) {
  const std::size_t n = t.row_count();
  if (n == 0) {
    CHECK(subs.empty());
    return;
  }
  std::vector<std::size_t> cost(n);
  for (std::size_t r = 0; r < n; ++r) cost[r] = tok().count(serialize_row_fragment(t.rows[r], r));
  const std::size_t header = tok().count(serialize_header_line(t.headers));

  REQUIRE_FALSE(subs.empty());
  CHECK(subs.front().start_row == 0);
  CHECK(subs.back().nominal_end == n);
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const auto& s = subs[i];
    REQUIRE(s.start_row < s.nominal_end);
    REQUIRE(s.nominal_end <= s.end_row);
    REQUIRE(s.end_row <= n);
    if (i + 1 < subs.size()) REQUIRE(subs[i + 1].start_row == s.nominal_end);

    // Nominal rows fit, and the actual serialization agrees.
    const std::size_t nominal =
        header + std::accumulate(cost.begin() + s.start_row, cost.begin() + s.nominal_end,
                                 std::size_t{0});
    REQUIRE(nominal <= allowed);
    REQUIRE(tok().count(serialize_rows(
                t.headers,
                std::span<const Row>(t.rows).subspan(s.start_row, s.nominal_end - s.start_row),
                s.start_row)) == nominal);
    // Greedy: the next row would not have fit.
    if (s.nominal_end < n) REQUIRE(nominal + cost[s.nominal_end] > allowed);

    // Overlap reaches the offset (or the table end) and is minimal.
    const std::size_t extra = std::accumulate(cost.begin() + s.nominal_end,
                                              cost.begin() + s.end_row, std::size_t{0});
    if (s.end_row < n) REQUIRE(extra >= offset);
    if (s.end_row > s.nominal_end) REQUIRE(extra - cost[s.end_row - 1] < offset);
    // Slack bound: the extended subtable stays under allowed + offset plus one row.
    const std::size_t max_row = *std::max_element(cost.begin(), cost.end());
    REQUIRE(nominal + extra <= allowed + offset + max_row);
  }
}

}  // namespace

TEST_SUITE("segmenter") {
  TEST_CASE("hundred-token rows under 458 with offset 200") {
    auto t = hundred_token_rows(10);
    auto costs = measure_row_costs(t, tok());
    REQUIRE(costs.header == 8);
    REQUIRE(costs.rows[0] == 100);
    auto subs = segment_table(t, 458, 200, tok());
    REQUIRE(subs.size() == 3);
    CHECK(subs[0] == Subtable{"wide", 0, 6, 4});
    CHECK(subs[1] == Subtable{"wide", 4, 10, 8});
    CHECK(subs[2] == Subtable{"wide", 8, 10, 10});
  }

  TEST_CASE("a table that fits is one subtable") {
    auto t = hundred_token_rows(3);
    auto subs = segment_table(t, 1000, 200, tok());
    REQUIRE(subs.size() == 1);
    CHECK(subs[0] == Subtable{"wide", 0, 3, 3});
  }

  TEST_CASE("offset 0 gives a partition") {
    auto t = hundred_token_rows(10);
    auto subs = segment_table(t, 458, 0, tok());
    REQUIRE(subs.size() == 3);
    for (const auto& s : subs) CHECK(s.end_row == s.nominal_end);
  }

  TEST_CASE("a row that cannot fit names the table and the row") {
    auto t = hundred_token_rows(3);
    try {
      segment_table(t, 107, 0, tok());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("'wide'") != std::string::npos);
      CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
    CHECK_NOTHROW(segment_table(t, 108, 0, tok()));
  }

  TEST_CASE("a table without rows has no subtables") {
    Table t{"empty", {}, {"h"}, {}};
    CHECK(segment_table(t, 100, 10, tok()).empty());
  }

  TEST_CASE("entity linking picks the first subtable holding the mention") {
    auto t = hundred_token_rows(10);
    std::vector<Subtable> subs{{"wide", 0, 6, 4}, {"wide", 4, 10, 8}};
    TaskInstance inst{"el", Task::EntityLinking, "wide", MentionKey{"w", {7, 0}}, {}, {"a"}, {"a"}};
    auto sel = select_subtable(inst, t, subs);
    CHECK(sel.subtable == subs[1]);
    CHECK_FALSE(sel.warning.has_value());
    TaskInstance early{"el", Task::EntityLinking, "wide", MentionKey{"w", {5, 0}}, {}, {"a"}, {"a"}};
    CHECK(select_subtable(early, t, subs).subtable == subs[0]);
  }

  TEST_CASE("fact verification takes the first subtable") {
    auto t = hundred_token_rows(10);
    auto subs = segment_table(t, 458, 200, tok());
    TaskInstance inst{"f", Task::FactVerification, "wide", StatementKey{"s"}, {}, {}, {"entailed"}};
    CHECK(select_subtable(inst, t, subs).subtable == subs.front());
  }

  TEST_CASE("ranking tasks get the empty sentinel") {
    auto t = hundred_token_rows(2);
    auto subs = segment_table(t, 458, 200, tok());
    TaskInstance inst{"r", Task::SchemaAugmentation, "wide", SeedHeaderKey{"h"}, {}, {"x"}, {"x"}};
    auto sel = select_subtable(inst, t, subs);
    CHECK(sel.subtable == Subtable{"wide", 0, 0, 0});
    CHECK(sel.subtable.empty());
  }

  TEST_CASE("column type follows the demonstrated entity") {
    Table t{"t", {}, {"k", "v"}, {{"1", "a"}, {"2", "b"}, {"3", "c"}}};
    std::vector<Subtable> subs{{"t", 0, 1, 1}, {"t", 1, 3, 3}};
    TaskInstance inst{"c", Task::ColumnTypeAnnotation, "t", ColumnKey{1}, {}, {}, {"x"}};
    CHECK(select_subtable(inst, t, subs, 2).subtable == subs[1]);
    CHECK(select_subtable(inst, t, subs).subtable == subs[0]);
  }

  TEST_CASE("column type without any entity falls back with a warning") {
    Table t{"t", {}, {"k", "v"}, {{"1", ""}, {"2", ""}}};
    auto subs = segment_table(t, 100, 0, tok());
    TaskInstance inst{"c", Task::ColumnTypeAnnotation, "t", ColumnKey{1}, {}, {}, {"x"}};
    auto sel = select_subtable(inst, t, subs);
    CHECK(sel.subtable == subs.front());
    REQUIRE(sel.warning.has_value());
    CHECK(sel.warning->find("first subtable") != std::string::npos);
  }

  TEST_CASE("relation extraction needs both entities in one row") {
    Table t{"t", {}, {"s", "o"}, {{"x", "y"}, {"p", "q"}, {"x", "y"}}};
    std::vector<Subtable> subs{{"t", 0, 1, 1}, {"t", 1, 3, 3}};
    TaskInstance inst{"r", Task::RelationExtraction, "t", ColumnPairKey{0, 1}, {}, {}, {"rel"}};
    CHECK(select_subtable(inst, t, subs, 2).subtable == subs[0]);
    CHECK(select_subtable(inst, t, subs, 1).subtable == subs[1]);
  }

  TEST_CASE("random tables keep coverage, overlap and budget") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
      auto t = testing::random_table(rng, "r" + std::to_string(trial), 40, 5, 6);
      const auto costs = measure_row_costs(t, tok());
      std::size_t widest = costs.header;
      for (auto c : costs.rows) widest = std::max(widest, costs.header + c);
      const std::size_t allowed = widest + rng.below(200);
      const std::size_t offset = rng.below(80);
      auto subs = segment_table(t, allowed, offset, tok());
      check_segmentation(t, subs, allowed, offset);
    }
  }
}
