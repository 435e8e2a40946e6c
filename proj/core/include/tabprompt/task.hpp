#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tabprompt/table.hpp"

namespace tabprompt {

enum class Task {
  ColumnTypeAnnotation,
  RelationExtraction,
  EntityLinking,
  RowPopulation,
  SchemaAugmentation,
  HierarchicalQa,
  HighlightedCellsQa,
  FactVerification,
};

inline constexpr std::array<Task, 8> kAllTasks = {
    Task::ColumnTypeAnnotation, Task::RelationExtraction, Task::EntityLinking,
    Task::RowPopulation,        Task::SchemaAugmentation, Task::HierarchicalQa,
    Task::HighlightedCellsQa,   Task::FactVerification,
};

/// Kebab-case identifier, e.g. "column-type-annotation".
std::string_view task_name(Task task) noexcept;
/// Inverse of task_name; std::nullopt for unknown names.
std::optional<Task> parse_task(std::string_view name) noexcept;

/// Choice tasks answered by divide-and-merge.
bool is_classification(Task task) noexcept;
/// Exactly one gold label (entity linking).
bool is_single_label(Task task) noexcept;
/// Candidate ranking tasks answered by tree rank.
bool is_ranking(Task task) noexcept;
/// Tasks whose prompt needs a candidate list.
bool needs_candidates(Task task) noexcept;

struct CellCoord {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const CellCoord&, const CellCoord&) = default;
};

struct ColumnKey {
  std::size_t column = 0;
  friend bool operator==(const ColumnKey&, const ColumnKey&) = default;
};
struct ColumnPairKey {
  std::size_t subject = 0;
  std::size_t object = 0;
  friend bool operator==(const ColumnPairKey&, const ColumnPairKey&) = default;
};
struct MentionKey {
  std::string mention;
  CellCoord cell;
  friend bool operator==(const MentionKey&, const MentionKey&) = default;
};
struct SeedEntityKey {
  std::string entity;
  friend bool operator==(const SeedEntityKey&, const SeedEntityKey&) = default;
};
struct SeedHeaderKey {
  std::string header;
  friend bool operator==(const SeedHeaderKey&, const SeedHeaderKey&) = default;
};
struct QuestionKey {
  std::string question;
  friend bool operator==(const QuestionKey&, const QuestionKey&) = default;
};
struct StatementKey {
  std::string statement;
  friend bool operator==(const StatementKey&, const StatementKey&) = default;
};

using TaskKey = std::variant<ColumnKey, ColumnPairKey, MentionKey, SeedEntityKey,
                             SeedHeaderKey, QuestionKey, StatementKey>;

/// One unit of work against one table.
struct TaskInstance {
  std::string id;
  Task task = Task::ColumnTypeAnnotation;
  std::string table_id;
  TaskKey key;
  std::vector<CellCoord> highlighted_cells;
  std::vector<std::string> candidates;
  std::vector<std::string> gold;

  friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

/// Every broken instance invariant, as human-readable text. Empty means ok.
std::vector<std::string> validate_instance(const TaskInstance& instance, const Table& table);

/// Instance JSONL: {"id"?, "task", "table_id", "key":{..}, "highlighted_cells"?,
/// "candidates"?, "gold"}. Missing ids default to "<table_id>#<line>".
std::vector<TaskInstance> load_instances(std::istream& in);
std::vector<TaskInstance> load_instances_file(const std::string& path);
void write_instances(std::ostream& out, std::span<const TaskInstance> instances);

}  // namespace tabprompt
