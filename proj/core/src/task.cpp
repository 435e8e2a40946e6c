#include "tabprompt/task.hpp"

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

constexpr std::array<std::string_view, 8> kTaskNames = {
    "column-type-annotation", "relation-extraction", "entity-linking",
    "row-population",         "schema-augmentation", "hierarchical-qa",
    "highlighted-cells-qa",   "fact-verification",
};

bool key_matches(Task task, const TaskKey& key) {
  switch (task) {
    case Task::ColumnTypeAnnotation: return std::holds_alternative<ColumnKey>(key);
    case Task::RelationExtraction: return std::holds_alternative<ColumnPairKey>(key);
    case Task::EntityLinking: return std::holds_alternative<MentionKey>(key);
    case Task::RowPopulation: return std::holds_alternative<SeedEntityKey>(key);
    case Task::SchemaAugmentation: return std::holds_alternative<SeedHeaderKey>(key);
    case Task::HierarchicalQa:
    case Task::HighlightedCellsQa: return std::holds_alternative<QuestionKey>(key);
    case Task::FactVerification: return std::holds_alternative<StatementKey>(key);
  }
  return false;
}

std::size_t get_index(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_number_integer() || it->get<long long>() < 0)
    throw DataError(line_prefix(line) + "key field '" + field +
                    "' must be a non-negative integer");
  return it->get<std::size_t>();
}

TaskKey parse_key(Task task, const json& key, std::size_t line) {
  if (!key.is_object()) throw DataError(line_prefix(line) + "field 'key' must be an object");
  switch (task) {
    case Task::ColumnTypeAnnotation:
      return ColumnKey{get_index(key, "column", line)};
    case Task::RelationExtraction: {
      auto it = key.find("columns");
      if (it == key.end() || !it->is_array() || it->size() != 2 ||
          !(*it)[0].is_number_unsigned() || !(*it)[1].is_number_unsigned())
        throw DataError(line_prefix(line) + "key 'columns' must be a pair of column indices");
      return ColumnPairKey{(*it)[0].get<std::size_t>(), (*it)[1].get<std::size_t>()};
    }
    case Task::EntityLinking:
      return MentionKey{detail::get_string(key, "mention", line),
                        CellCoord{get_index(key, "row", line), get_index(key, "col", line)}};
    case Task::RowPopulation:
      return SeedEntityKey{detail::get_string(key, "seed_entity", line)};
    case Task::SchemaAugmentation:
      return SeedHeaderKey{detail::get_string(key, "seed_header", line)};
    case Task::HierarchicalQa:
    case Task::HighlightedCellsQa:
      return QuestionKey{detail::get_string(key, "question", line)};
    case Task::FactVerification:
      return StatementKey{detail::get_string(key, "statement", line)};
  }
  throw DataError(line_prefix(line) + "unsupported task");
}

json key_to_json(const TaskKey& key) {
  return std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ColumnKey>) return {{"column", k.column}};
        else if constexpr (std::is_same_v<K, ColumnPairKey>)
          return {{"columns", {k.subject, k.object}}};
        else if constexpr (std::is_same_v<K, MentionKey>)
          return {{"mention", k.mention}, {"row", k.cell.row}, {"col", k.cell.col}};
        else if constexpr (std::is_same_v<K, SeedEntityKey>) return {{"seed_entity", k.entity}};
        else if constexpr (std::is_same_v<K, SeedHeaderKey>) return {{"seed_header", k.header}};
        else if constexpr (std::is_same_v<K, QuestionKey>) return {{"question", k.question}};
        else return {{"statement", k.statement}};
      },
      key);
}

std::string coord_text(const CellCoord& c) {
  return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

bool in_bounds(const CellCoord& c, const Table& table) {
  return c.row < table.row_count() && c.col < table.column_count();
}

}  // namespace

std::string_view task_name(Task task) noexcept {
  return kTaskNames[static_cast<std::size_t>(task)];
}

std::optional<Task> parse_task(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kTaskNames.size(); ++i)
    if (kTaskNames[i] == name) return static_cast<Task>(i);
  return std::nullopt;
}

bool is_classification(Task task) noexcept {
  return task == Task::ColumnTypeAnnotation || task == Task::RelationExtraction ||
         task == Task::EntityLinking;
}

bool is_single_label(Task task) noexcept { return task == Task::EntityLinking; }

bool is_ranking(Task task) noexcept {
  return task == Task::RowPopulation || task == Task::SchemaAugmentation;
}

bool needs_candidates(Task task) noexcept { return is_classification(task) || is_ranking(task); }

std::vector<std::string> validate_instance(const TaskInstance& instance, const Table& table) {
  std::vector<std::string> violations;
  if (instance.table_id != table.id)
    violations.push_back("table_id '" + instance.table_id + "' does not match table '" +
                         table.id + "'");

  if (!key_matches(instance.task, instance.key)) {
    violations.push_back("key does not match task " + std::string(task_name(instance.task)));
  } else if (const auto* col = std::get_if<ColumnKey>(&instance.key)) {
    if (col->column >= table.column_count())
      violations.push_back("target column " + std::to_string(col->column) +
                           " out of range (" + std::to_string(table.column_count()) +
                           " columns)");
  } else if (const auto* pair = std::get_if<ColumnPairKey>(&instance.key)) {
    for (auto c : {pair->subject, pair->object})
      if (c >= table.column_count())
        violations.push_back("column " + std::to_string(c) + " out of range (" +
                             std::to_string(table.column_count()) + " columns)");
    if (pair->subject == pair->object)
      violations.push_back("column pair repeats column " + std::to_string(pair->subject));
  } else if (const auto* mention = std::get_if<MentionKey>(&instance.key)) {
    if (!in_bounds(mention->cell, table))
      violations.push_back("coordinate out of bounds " + coord_text(mention->cell));
  }

  for (const auto& cell : instance.highlighted_cells)
    if (!in_bounds(cell, table))
      violations.push_back("coordinate out of bounds " + coord_text(cell));

  if (is_single_label(instance.task) && instance.gold.size() != 1)
    violations.push_back("single-label task has " + std::to_string(instance.gold.size()) +
                         " golds");

  if (instance.task == Task::FactVerification) {
    if (instance.gold.size() != 1 ||
        (instance.gold[0] != "entailed" && instance.gold[0] != "refuted"))
      violations.push_back("fact-verification gold must be exactly one of entailed/refuted");
  }
  return violations;
}

std::vector<TaskInstance> load_instances(std::istream& in) {
  std::vector<TaskInstance> out;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (detail::is_blank(text)) continue;
    auto obj = detail::parse_line(text, line);
    TaskInstance inst;
    auto name = detail::get_string(obj, "task", line);
    auto task = parse_task(name);
    if (!task) throw DataError(line_prefix(line) + "unknown task '" + name + "'");
    inst.task = *task;
    inst.table_id = detail::get_string(obj, "table_id", line);
    inst.id = detail::get_string(obj, "id", line, false);
    if (inst.id.empty()) inst.id = inst.table_id + "#" + std::to_string(line);
    auto key = obj.find("key");
    if (key == obj.end()) throw DataError(line_prefix(line) + "missing field 'key'");
    inst.key = parse_key(inst.task, *key, line);
    if (auto hc = obj.find("highlighted_cells"); hc != obj.end() && !hc->is_null()) {
      if (!hc->is_array())
        throw DataError(line_prefix(line) + "'highlighted_cells' must be an array");
      for (const auto& c : *hc) {
        if (!c.is_array() || c.size() != 2 || !c[0].is_number_unsigned() ||
            !c[1].is_number_unsigned())
          throw DataError(line_prefix(line) + "highlighted cell must be [row, col]");
        inst.highlighted_cells.push_back({c[0].get<std::size_t>(), c[1].get<std::size_t>()});
      }
    }
    inst.candidates = detail::get_string_list(obj, "candidates", line, false);
    inst.gold = detail::get_string_list(obj, "gold", line);
    if (!seen.insert(inst.id).second)
      throw DataError(line_prefix(line) + "duplicate instance id '" + inst.id + "'");
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<TaskInstance> load_instances_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open instance file '" + path + "'");
  return load_instances(in);
}

void write_instances(std::ostream& out, std::span<const TaskInstance> instances) {
  for (const auto& inst : instances) {
    json obj = {{"id", inst.id},
                {"task", task_name(inst.task)},
                {"table_id", inst.table_id},
                {"key", key_to_json(inst.key)},
                {"gold", inst.gold}};
    if (!inst.highlighted_cells.empty()) {
      json cells = json::array();
      for (const auto& c : inst.highlighted_cells) cells.push_back({c.row, c.col});
      obj["highlighted_cells"] = std::move(cells);
    }
    if (!inst.candidates.empty()) obj["candidates"] = inst.candidates;
    out << obj.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

}  // namespace tabprompt
