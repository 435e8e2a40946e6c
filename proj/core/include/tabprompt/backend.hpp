#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabprompt/task.hpp"

namespace tabprompt {

/// One completion call. `prompt` and `max_tokens` are what a remote model
/// sees; the remaining fields are hints that let mock oracles answer without
/// parsing prompt text.
struct CompletionRequest {
  std::string prompt;
  int max_tokens = 64;
  std::string instance_id;
  /// The option list offered in the prompt (divide-and-merge subsets).
  std::vector<std::string> options;
  /// Options are rendered as <item> in the prompt and expected back that way.
  bool bracketed = false;
};

/// Model access used by divide-and-merge and tree rank. Implementations must
/// tolerate concurrent calls.
class OracleBackend {
 public:
  virtual ~OracleBackend() = default;

  virtual std::string complete(const CompletionRequest& request) = 0;

  /// Returns `items` reordered best-first; every item exactly once.
  /// `context` is the full ranking prompt for backends that need text.
  virtual std::vector<std::string> rank(std::span<const std::string> items,
                                        std::string_view context) = 0;
};

/// Maximum generation length per task: 512 for row population, 128 for
/// free-form QA and schema augmentation, 64 otherwise.
int max_generation_tokens(Task task) noexcept;

}  // namespace tabprompt
