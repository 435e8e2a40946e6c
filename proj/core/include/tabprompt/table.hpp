#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tabprompt {

/// Wikipedia-style context shown ahead of the table. Each field is single
/// line; empty fields are legal and skipped when serializing.
struct TableMetadata {
  std::string page_title;
  std::string section_title;
  std::string caption;

  bool empty() const noexcept {
    return page_title.empty() && section_title.empty() && caption.empty();
  }
  friend bool operator==(const TableMetadata&, const TableMetadata&) = default;
};

using Row = std::vector<std::string>;

/// A rectangular table: every row has exactly headers.size() cells and
/// headers is never empty. Cell text is kept verbatim.
struct Table {
  std::string id;
  TableMetadata metadata;
  std::vector<std::string> headers;
  std::vector<Row> rows;

  std::size_t row_count() const noexcept { return rows.size(); }
  std::size_t column_count() const noexcept { return headers.size(); }
  const std::string& cell(std::size_t row, std::size_t col) const { return rows.at(row).at(col); }

  friend bool operator==(const Table&, const Table&) = default;
};

struct LoadOptions {
  /// Pad ragged rows instead of rejecting them. Short rows gain empty cells;
  /// when a row is longer than the header, unnamed columns are appended.
  bool pad_ragged = true;
};

struct TableCorpus {
  std::vector<Table> tables;
  /// One entry per repaired record (padding, newline folding).
  std::vector<std::string> warnings;
};

/// Reads the table JSONL format, one object per line:
/// {"id","page_title","section_title","caption","headers":[..],"rows":[[..]]}.
/// Blank lines are skipped. Throws DataError naming the line on malformed
/// records, arity violations (when padding is off) and duplicate ids.
TableCorpus load_tables(std::istream& in, const LoadOptions& options = {});
TableCorpus load_tables_file(const std::string& path, const LoadOptions& options = {});

/// Inverse of load_tables for valid tables.
void write_tables(std::ostream& out, std::span<const Table> tables);

/// Throws DataError if the table breaks a structural invariant.
void check_table(const Table& table);

}  // namespace tabprompt
