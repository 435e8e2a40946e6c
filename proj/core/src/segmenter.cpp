#include "tabprompt/segmenter.hpp"

#include "tabprompt/error.hpp"
#include "tabprompt/serializer.hpp"

namespace tabprompt {
namespace {

Subtable empty_sentinel(const Table& table) { return Subtable{table.id, 0, 0, 0}; }

std::size_t nominal_cost(const Table& table, std::size_t start, std::size_t end,
                         const Tokenizer& tok) {
  return tok.count(serialize_rows(table.headers,
                                  std::span<const Row>(table.rows).subspan(start, end - start),
                                  start));
}

}  // namespace

RowCosts measure_row_costs(const Table& table, const Tokenizer& tok) {
  RowCosts costs;
  costs.header = tok.count(serialize_header_line(table.headers));
  costs.rows.reserve(table.row_count());
  for (std::size_t r = 0; r < table.row_count(); ++r)
    costs.rows.push_back(tok.count(serialize_row_fragment(table.rows[r], r)));
  return costs;
}

std::vector<Subtable> segment_table(const Table& table, std::size_t allowed, std::size_t offset,
                                    const Tokenizer& tok) {
  const RowCosts costs = measure_row_costs(table, tok);
  const std::size_t n = table.row_count();
  for (std::size_t r = 0; r < n; ++r) {
    if (costs.header + costs.rows[r] > allowed)
      throw DataError("table '" + table.id + "' is unsegmentable: row " + std::to_string(r + 1) +
                      " needs " + std::to_string(costs.header + costs.rows[r]) +
                      " tokens with the header, allowed " + std::to_string(allowed));
  }

  std::vector<Subtable> out;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start;
    std::size_t used = costs.header;
    while (end < n && used + costs.rows[end] <= allowed) used += costs.rows[end++];

    // Fragment sums are exact for tokenizers that never merge across
    // whitespace; confirm against the real serialization for the rest.
    while (end > start + 1 && nominal_cost(table, start, end, tok) > allowed) --end;

    std::size_t extended = end;
    std::size_t extra = 0;
    while (extended < n && extra < offset) extra += costs.rows[extended++];

    out.push_back(Subtable{table.id, start, extended, end});
    start = end;
  }
  return out;
}

Selection select_subtable(const TaskInstance& instance, const Table& table,
                          std::span<const Subtable> subtables,
                          std::optional<std::size_t> demo_row) {
  if (is_ranking(instance.task) || subtables.empty()) return {empty_sentinel(table), {}};

  auto fallback = [&](std::string why) {
    return Selection{subtables.front(), "instance '" + instance.id + "': " + std::move(why) +
                                            "; using the first subtable"};
  };
  auto first_with_row = [&](auto&& row_matches) -> std::optional<Subtable> {
    for (const auto& sub : subtables)
      for (std::size_t r = sub.start_row; r < sub.end_row && r < table.row_count(); ++r)
        if (row_matches(r)) return sub;
    return std::nullopt;
  };

  if (!demo_row) demo_row = demonstration_row(instance, table);

  if (const auto* col = std::get_if<ColumnKey>(&instance.key)) {
    if (!demo_row || col->column >= table.column_count())
      return fallback("no demonstrated entity in the target column");
    const auto& entity = table.rows[*demo_row][col->column];
    if (auto hit = first_with_row([&](std::size_t r) { return table.rows[r][col->column] == entity; }))
      return {*hit, {}};
    return fallback("entity '" + entity + "' not found in any subtable");
  }
  if (const auto* pair = std::get_if<ColumnPairKey>(&instance.key)) {
    if (!demo_row || pair->subject >= table.column_count() ||
        pair->object >= table.column_count())
      return fallback("no demonstrated entity pair in the target columns");
    const auto& subject = table.rows[*demo_row][pair->subject];
    const auto& object = table.rows[*demo_row][pair->object];
    if (auto hit = first_with_row([&](std::size_t r) {
          return table.rows[r][pair->subject] == subject && table.rows[r][pair->object] == object;
        }))
      return {*hit, {}};
    return fallback("entity pair not found in any subtable");
  }
  if (const auto* mention = std::get_if<MentionKey>(&instance.key)) {
    for (const auto& sub : subtables)
      if (sub.contains_row(mention->cell.row)) return {sub, {}};
    return fallback("mention cell outside every subtable");
  }
  return {subtables.front(), {}};
}

}  // namespace tabprompt
