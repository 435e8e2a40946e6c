#include "tabprompt/table.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "json_util.hpp"
#include "tabprompt/error.hpp"

namespace tabprompt {
namespace {

using detail::json;
using detail::line_prefix;

bool fold_newlines(std::string& text) {
  bool changed = false;
  for (char& c : text) {
    if (c == '\n' || c == '\r') {
      c = ' ';
      changed = true;
    }
  }
  return changed;
}

Table parse_table(const json& obj, std::size_t line, const LoadOptions& options,
                  std::vector<std::string>& warnings) {
  Table table;
  table.id = detail::get_string(obj, "id", line);
  table.metadata.page_title = detail::get_string(obj, "page_title", line, false);
  table.metadata.section_title = detail::get_string(obj, "section_title", line, false);
  table.metadata.caption = detail::get_string(obj, "caption", line, false);
  table.headers = detail::get_string_list(obj, "headers", line);
  if (table.headers.empty())
    throw DataError(line_prefix(line) + "table '" + table.id + "' has no headers");

  for (auto* field : {&table.metadata.page_title, &table.metadata.section_title,
                      &table.metadata.caption}) {
    if (fold_newlines(*field))
      warnings.push_back(line_prefix(line) + "folded newline in metadata of '" + table.id + "'");
  }

  auto rows_it = obj.find("rows");
  if (rows_it == obj.end() || !rows_it->is_array())
    throw DataError(line_prefix(line) + "field 'rows' must be an array of arrays");

  std::size_t widest = table.headers.size();
  for (std::size_t r = 0; r < rows_it->size(); ++r) {
    const auto& raw = (*rows_it)[r];
    if (!raw.is_array())
      throw DataError(line_prefix(line) + "row " + std::to_string(r + 1) + " is not an array");
    Row row;
    row.reserve(raw.size());
    for (const auto& cell : raw) {
      if (!cell.is_string())
        throw DataError(line_prefix(line) + "row " + std::to_string(r + 1) +
                        " holds a non-string cell");
      row.push_back(cell.get<std::string>());
    }
    if (row.size() != table.headers.size()) {
      if (!options.pad_ragged)
        throw DataError(line_prefix(line) + "row " + std::to_string(r + 1) + " has " +
                        std::to_string(row.size()) + " cells, expected " +
                        std::to_string(table.headers.size()));
      warnings.push_back(line_prefix(line) + "table '" + table.id + "' row " +
                         std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                         " cells, expected " + std::to_string(table.headers.size()) +
                         "; padded");
      widest = std::max(widest, row.size());
    }
    table.rows.push_back(std::move(row));
  }

  table.headers.resize(widest);
  for (auto& row : table.rows) row.resize(widest);
  return table;
}

}  // namespace

void check_table(const Table& table) {
  if (table.headers.empty()) throw DataError("table '" + table.id + "' has no headers");
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != table.headers.size())
      throw DataError("table '" + table.id + "' row " + std::to_string(r + 1) + " has " +
                      std::to_string(table.rows[r].size()) + " cells, expected " +
                      std::to_string(table.headers.size()));
  }
  for (const auto* field : {&table.metadata.page_title, &table.metadata.section_title,
                            &table.metadata.caption}) {
    if (field->find_first_of("\r\n") != std::string::npos)
      throw DataError("table '" + table.id + "' has multi-line metadata");
  }
}

TableCorpus load_tables(std::istream& in, const LoadOptions& options) {
  TableCorpus corpus;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (detail::is_blank(text)) continue;
    auto table = parse_table(detail::parse_line(text, line), line, options, corpus.warnings);
    if (!seen.insert(table.id).second)
      throw DataError(line_prefix(line) + "duplicate table id '" + table.id + "'");
    corpus.tables.push_back(std::move(table));
  }
  return corpus;
}

TableCorpus load_tables_file(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open table file '" + path + "'");
  return load_tables(in, options);
}

void write_tables(std::ostream& out, std::span<const Table> tables) {
  for (const auto& table : tables) {
    json obj = {
        {"id", table.id},
        {"page_title", table.metadata.page_title},
        {"section_title", table.metadata.section_title},
        {"caption", table.metadata.caption},
        {"headers", table.headers},
        {"rows", table.rows},
    };
    out << obj.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

}  // namespace tabprompt
