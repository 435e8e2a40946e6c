#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tabprompt/task.hpp"

namespace tabprompt {

/// Text templates for one task. Placeholders are written {name}.
struct TaskTemplate {
  std::string instruction;
  std::string question;
  /// Appended to the input block after the metadata/table text. Used by the
  /// population tasks to carry the [SEED] sentence.
  std::string input_suffix;
};

using TemplateValues = std::map<std::string, std::string, std::less<>>;

/// Task id -> templates. Built-in entries cover the eight in-domain tasks
/// plus inference-only extras: hybrid-qa, table-dialogue,
/// cells-description, feverous and table-qa.
class TemplateRegistry {
 public:
  static TemplateRegistry builtin();

  /// Built-ins overridden by `<id>.instruction.txt`, `<id>.question.txt`
  /// and `<id>.input.txt` files found in `dir`. A single trailing newline is
  /// stripped from each file. Throws DataError on unbalanced placeholders.
  static TemplateRegistry with_overrides(const std::filesystem::path& dir);

  const TaskTemplate& get(std::string_view id) const;
  const TaskTemplate& get(Task task) const { return get(task_name(task)); }
  bool contains(std::string_view id) const { return templates_.find(id) != templates_.end(); }

  void set(std::string id, TaskTemplate tmpl);
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, TaskTemplate, std::less<>> templates_;
};

/// True when every '{' closes with '}' around a non-empty identifier and no
/// braces nest.
bool placeholders_balanced(std::string_view tmpl) noexcept;

/// Placeholder names in order of appearance (duplicates kept).
std::vector<std::string> placeholder_names(std::string_view tmpl);

/// Single-pass substitution; substituted text is not rescanned. Throws
/// DataError for unbalanced templates or placeholders without a value.
std::string fill_template(std::string_view tmpl, const TemplateValues& values);

}  // namespace tabprompt
