#include "tabprompt/budget.hpp"

#include <algorithm>
#include <string>

#include "tabprompt/error.hpp"

namespace tabprompt {

BudgetPlan BudgetPlan::defaults(std::size_t prologue_reserve, std::size_t model_limit) {
  BudgetPlan plan;
  plan.model_limit = model_limit;
  plan.prologue_reserve = prologue_reserve;
  for (Task task : kAllTasks) plan.instruction_reserve[task] = 100;
  plan.instruction_reserve[Task::HighlightedCellsQa] = 50;
  plan.instruction_reserve[Task::EntityLinking] = 500;
  return plan;
}

void BudgetPlan::validate() const {
  std::size_t largest = 0;
  for (const auto& [task, reserve] : instruction_reserve) largest = std::max(largest, reserve);
  const std::size_t reserved = prologue_reserve + metadata_reserve + largest;
  if (model_limit <= reserved)
    throw DataError("budget plan leaves no room for a table: model_limit " +
                    std::to_string(model_limit) + " <= reserved " + std::to_string(reserved));
}

std::size_t allowed_subtable_len(const BudgetPlan& plan, Task task) {
  auto it = plan.instruction_reserve.find(task);
  if (it == plan.instruction_reserve.end())
    throw DataError("budget plan has no instruction reserve for task '" +
                    std::string(task_name(task)) + "'");
  const std::size_t reserved = plan.prologue_reserve + plan.metadata_reserve + it->second;
  if (plan.model_limit <= reserved)
    throw DataError("budget plan leaves no room for a table on task '" +
                    std::string(task_name(task)) + "'");
  return plan.model_limit - reserved;
}

std::size_t measure_prologue_reserve(std::string_view prologue, const Tokenizer& tok) {
  return tok.count(prologue) + tok.count(kPromptScaffold);
}

}  // namespace tabprompt
