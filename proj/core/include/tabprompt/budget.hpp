#pragma once

#include <cstddef>
#include <map>
#include <string_view>

#include "tabprompt/task.hpp"
#include "tabprompt/tokenizer.hpp"

namespace tabprompt {

/// Token reservations that decide how much of the context window the table
/// may occupy. Defaults are the published pipeline constants.
struct BudgetPlan {
  std::size_t model_limit = 2048;
  std::size_t metadata_reserve = 20;
  std::map<Task, std::size_t> instruction_reserve;
  std::size_t offset = 200;
  std::size_t prologue_reserve = 0;

  /// Paper defaults: 50 for free-form (highlighted cells) QA, 500 for entity
  /// linking, 100 for everything else; offset 200; metadata 20.
  static BudgetPlan defaults(std::size_t prologue_reserve = 0, std::size_t model_limit = 2048);

  /// Throws DataError unless model_limit leaves room for a table under the
  /// largest instruction reservation.
  void validate() const;
};

/// model_limit - prologue_reserve - metadata_reserve - instruction_reserve[task].
/// Throws DataError for tasks missing from the plan.
std::size_t allowed_subtable_len(const BudgetPlan& plan, Task task);

/// Section markers that every assembled prompt carries.
inline constexpr std::string_view kPromptScaffold =
    "### Instruction:\n\n### Input:\n\n### Question:\n\n### Response:";

/// Measured prologue reservation: tokens of the prologue plus the scaffold.
std::size_t measure_prologue_reserve(std::string_view prologue, const Tokenizer& tok);

}  // namespace tabprompt
