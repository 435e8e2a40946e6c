#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "tabprompt/table.hpp"
#include "tabprompt/task.hpp"
#include "tabprompt/templates.hpp"

namespace tabprompt {

inline constexpr std::string_view kAlpacaPrologue =
    "Below is an instruction that describes a task, paired with an input that provides "
    "further context. Write a response that appropriately completes the request.";
inline constexpr std::string_view kVicunaPrologue =
    "A chat between a curious user and an artificial intelligence assistant. The assistant "
    "gives helpful, detailed, and polite answers to the user's questions.";

enum class Layout { InstructionFirst, InputFirst };

/// `<instruction, table input, question> -> response`, plus the assembled
/// prompt text the model sees (without the response).
struct PromptRecord {
  std::string instruction;
  std::string input;
  std::string question;
  std::string response;
  std::string assembled;

  friend bool operator==(const PromptRecord&, const PromptRecord&) = default;
};

/// "[TLE] The Wikipedia page is about P. The Wikipedia section is about S.
/// The table caption is C." Empty fields drop their sentence; a caption-only
/// table reads "The table caption is about C."; all-empty yields "".
std::string serialize_metadata(const TableMetadata& meta);

/// Cell text as it appears in a serialized row: '|' becomes '/', line
/// breaks become spaces.
std::string sanitize_cell(std::string_view cell);

/// "[TAB] col: | h1 | h2 |"
std::string serialize_header_line(std::span<const std::string> headers);

/// " [SEP] row N: | c1 | c2 |" for 0-based `row_index` (N = row_index + 1),
/// including the leading space so fragments concatenate.
std::string serialize_row_fragment(const Row& row, std::size_t row_index);

/// Header line followed by one fragment per row, numbered from start_index + 1.
std::string serialize_rows(std::span<const std::string> headers, std::span<const Row> rows,
                           std::size_t start_index);

/// How CTA / RE choose the demonstrated entity (pair).
struct EntitySampling {
  enum class Mode { FirstRow, Seeded };
  Mode mode = Mode::FirstRow;
  std::uint64_t seed = 0;
};

/// Row whose value(s) demonstrate the target column(s): the first row with
/// non-empty target cells, or a seeded pick among such rows. Entity linking
/// returns the mention row. Other tasks, or no usable row: std::nullopt.
std::optional<std::size_t> demonstration_row(const TaskInstance& instance, const Table& table,
                                             const EntitySampling& sampling = {});

/// Rendered per-task text.
struct TaskText {
  std::string instruction;
  std::string question;
  std::string input_suffix;
};

/// Fills the task's templates. `candidate_subset` is required (non-empty)
/// for classification and ranking tasks and is rendered in order; CTA/RE
/// options print bare, entity-linking and ranking options print as <item>.
/// Throws DataError on missing candidates or unfilled placeholders.
TaskText render_instruction(const TaskInstance& instance, const Table& table,
                            std::span<const std::string> candidate_subset,
                            const TemplateRegistry& registry,
                            std::optional<std::size_t> demo_row = std::nullopt);

/// Metadata, then "[TAB] ..." for rows [start_row, end_row) unless
/// `include_table` is false, then the task's input suffix.
std::string render_input(const Table& table, std::size_t start_row, std::size_t end_row,
                         bool include_table, std::string_view input_suffix);

/// Prologue and the four "### X:" blocks separated by blank lines; ends with
/// "### Response:". InputFirst swaps the Instruction and Input blocks.
std::string assemble_prompt(std::string_view prologue, std::string_view instruction,
                            std::string_view input, std::string_view question, Layout layout);

/// "a, b, c." or, bracketed, "<a>, <b>, <c>." Empty list gives "".
std::string format_label_response(std::span<const std::string> labels, bool bracketed);

/// Free-text answers joined with ", ", ending in a period unless the text
/// already does. Empty list gives "".
std::string format_answer_response(std::span<const std::string> answers);

}  // namespace tabprompt
