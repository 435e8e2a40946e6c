#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabprompt/table.hpp"
#include "tabprompt/task.hpp"
#include "tabprompt/tokenizer.hpp"

namespace tabprompt {

/// Consecutive rows [start_row, end_row) of one table. Rows in
/// [start_row, nominal_end) were packed under the budget; rows from
/// nominal_end on are the overlap borrowed from the next segment.
struct Subtable {
  std::string table_id;
  std::size_t start_row = 0;
  std::size_t end_row = 0;
  std::size_t nominal_end = 0;

  bool empty() const noexcept { return start_row == end_row; }
  bool contains_row(std::size_t row) const noexcept { return row >= start_row && row < end_row; }

  friend bool operator==(const Subtable&, const Subtable&) = default;
};

/// Token cost of the header line and each serialized row fragment.
struct RowCosts {
  std::size_t header = 0;
  std::vector<std::size_t> rows;
};

RowCosts measure_row_costs(const Table& table, const Tokenizer& tok);

/// Greedy segmentation. Rows are packed into a segment while the serialized
/// header plus rows stays within `allowed` tokens; each segment is then
/// extended by whole rows until at least `offset` extra tokens are covered
/// or the table ends. The next segment starts at the previous nominal end.
/// A table with no rows yields no subtables. Throws DataError naming the
/// first row that cannot fit under `allowed` together with the header.
std::vector<Subtable> segment_table(const Table& table, std::size_t allowed, std::size_t offset,
                                    const Tokenizer& tok);

/// Outcome of picking the final subtable for an instance.
struct Selection {
  Subtable subtable;
  /// Set when the heuristic found no match and fell back to the first subtable.
  std::optional<std::string> warning;
};

/// Heuristic choice of the subtable an instance is answered from:
/// CTA and RE pick the first subtable holding the demonstrated entity (pair)
/// in the target column(s); entity linking picks the first subtable holding
/// the mention cell; QA and fact verification take the first subtable; row
/// population and schema augmentation get the empty sentinel {0, 0, 0}.
/// `demo_row` overrides the default demonstration row.
Selection select_subtable(const TaskInstance& instance, const Table& table,
                          std::span<const Subtable> subtables,
                          std::optional<std::size_t> demo_row = std::nullopt);

}  // namespace tabprompt
