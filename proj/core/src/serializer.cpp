#include "tabprompt/serializer.hpp"

#include <algorithm>
#include <vector>

#include "tabprompt/error.hpp"
#include "tabprompt/random.hpp"

namespace tabprompt {
namespace {

void append_cells(std::string& out, std::span<const std::string> cells) {
  out += '|';
  for (const auto& cell : cells) {
    if (cell.empty()) {
      out += " |";
    } else {
      out += ' ';
      out += sanitize_cell(cell);
      out += " |";
    }
  }
}

std::string join(std::span<const std::string> items, std::string_view sep, bool bracketed) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    if (bracketed) out += '<';
    out += items[i];
    if (bracketed) out += '>';
  }
  return out;
}

bool has_text(const std::string& s) { return s.find_first_not_of(" \t") != std::string::npos; }

}  // namespace

std::string serialize_metadata(const TableMetadata& meta) {
  if (meta.empty()) return {};
  std::string out = "[TLE]";
  if (!meta.page_title.empty()) out += " The Wikipedia page is about " + meta.page_title + ".";
  if (!meta.section_title.empty())
    out += " The Wikipedia section is about " + meta.section_title + ".";
  if (!meta.caption.empty()) {
    const bool caption_only = meta.page_title.empty() && meta.section_title.empty();
    out += caption_only ? " The table caption is about " : " The table caption is ";
    out += meta.caption + ".";
  }
  return out;
}

std::string sanitize_cell(std::string_view cell) {
  std::string out(cell);
  for (char& c : out) {
    if (c == '|') c = '/';
    else if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

std::string serialize_header_line(std::span<const std::string> headers) {
  std::string out = "[TAB] col: ";
  append_cells(out, headers);
  return out;
}

std::string serialize_row_fragment(const Row& row, std::size_t row_index) {
  std::string out = " [SEP] row " + std::to_string(row_index + 1) + ": ";
  append_cells(out, row);
  return out;
}

std::string serialize_rows(std::span<const std::string> headers, std::span<const Row> rows,
                           std::size_t start_index) {
  std::string out = serialize_header_line(headers);
  for (std::size_t i = 0; i < rows.size(); ++i) out += serialize_row_fragment(rows[i], start_index + i);
  return out;
}

std::optional<std::size_t> demonstration_row(const TaskInstance& instance, const Table& table,
                                             const EntitySampling& sampling) {
  if (const auto* mention = std::get_if<MentionKey>(&instance.key))
    return mention->cell.row < table.row_count() ? std::optional(mention->cell.row)
                                                 : std::nullopt;

  std::vector<std::size_t> columns;
  if (const auto* col = std::get_if<ColumnKey>(&instance.key)) {
    columns = {col->column};
  } else if (const auto* pair = std::get_if<ColumnPairKey>(&instance.key)) {
    columns = {pair->subject, pair->object};
  } else {
    return std::nullopt;
  }
  for (auto c : columns)
    if (c >= table.column_count()) return std::nullopt;

  std::vector<std::size_t> usable;
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    if (std::all_of(columns.begin(), columns.end(),
                    [&](std::size_t c) { return has_text(table.rows[r][c]); })) {
      if (sampling.mode == EntitySampling::Mode::FirstRow) return r;
      usable.push_back(r);
    }
  }
  if (usable.empty()) return std::nullopt;
  SplitMix64 rng(derive_seed(sampling.seed, fnv1a64(instance.id)));
  return usable[rng.below(usable.size())];
}

TaskText render_instruction(const TaskInstance& instance, const Table& table,
                            std::span<const std::string> candidate_subset,
                            const TemplateRegistry& registry,
                            std::optional<std::size_t> demo_row) {
  const Task task = instance.task;
  if (needs_candidates(task) && candidate_subset.empty())
    throw DataError("instance '" + instance.id + "' (" + std::string(task_name(task)) +
                    ") requires a non-empty candidate subset");

  const auto& tmpl = registry.get(task);
  TemplateValues values;
  const bool bracketed = task == Task::EntityLinking || is_ranking(task);
  if (needs_candidates(task)) values["candidates"] = join(candidate_subset, ", ", bracketed);

  auto header = [&](std::size_t c) -> std::string {
    return c < table.column_count() ? table.headers[c] : std::string{};
  };
  auto cell = [&](std::optional<std::size_t> r, std::size_t c) -> std::string {
    return (r && *r < table.row_count() && c < table.column_count()) ? table.rows[*r][c]
                                                                     : std::string{};
  };
  if (!demo_row) demo_row = demonstration_row(instance, table);

  std::visit(
      [&](const auto& key) {
        using K = std::decay_t<decltype(key)>;
        if constexpr (std::is_same_v<K, ColumnKey>) {
          values["column"] = header(key.column);
          values["entities"] = "<" + cell(demo_row, key.column) + ">";
        } else if constexpr (std::is_same_v<K, ColumnPairKey>) {
          values["subject_column"] = header(key.subject);
          values["object_column"] = header(key.object);
          values["entity_pairs"] =
              "<(" + cell(demo_row, key.subject) + "),(" + cell(demo_row, key.object) + ")>";
        } else if constexpr (std::is_same_v<K, MentionKey>) {
          values["mention"] = key.mention;
          values["column"] = header(key.cell.col);
        } else if constexpr (std::is_same_v<K, SeedEntityKey>) {
          std::string headers;
          append_cells(headers, table.headers);
          values["headers"] = std::move(headers);
          values["column"] = table.headers.empty() ? std::string{} : table.headers.front();
          values["seed"] = key.entity;
        } else if constexpr (std::is_same_v<K, SeedHeaderKey>) {
          values["seed"] = key.header;
        } else if constexpr (std::is_same_v<K, QuestionKey>) {
          values["question"] = key.question;
        } else {
          values["statement"] = key.statement;
        }
      },
      instance.key);

  if (task == Task::HighlightedCellsQa) {
    std::vector<std::string> cells;
    for (const auto& c : instance.highlighted_cells)
      if (c.row < table.row_count() && c.col < table.column_count())
        cells.push_back("[" + table.rows[c.row][c.col] + "]");
    values["highlighted"] = join(cells, ", ", false);
  }

  return TaskText{fill_template(tmpl.instruction, values), fill_template(tmpl.question, values),
                  fill_template(tmpl.input_suffix, values)};
}

std::string render_input(const Table& table, std::size_t start_row, std::size_t end_row,
                         bool include_table, std::string_view input_suffix) {
  std::string out = serialize_metadata(table.metadata);
  auto append = [&out](std::string_view part) {
    if (part.empty()) return;
    if (!out.empty()) out += ' ';
    out += part;
  };
  if (include_table) {
    end_row = std::min(end_row, table.row_count());
    start_row = std::min(start_row, end_row);
    append(serialize_rows(table.headers,
                          std::span<const Row>(table.rows).subspan(start_row, end_row - start_row),
                          start_row));
  }
  append(input_suffix);
  return out;
}

std::string assemble_prompt(std::string_view prologue, std::string_view instruction,
                            std::string_view input, std::string_view question, Layout layout) {
  std::string out;
  out.reserve(prologue.size() + instruction.size() + input.size() + question.size() + 96);
  if (!prologue.empty()) {
    out += prologue;
    out += "\n\n";
  }
  auto block = [&out](std::string_view marker, std::string_view body) {
    out += marker;
    out += '\n';
    out += body;
    out += "\n\n";
  };
  if (layout == Layout::InstructionFirst) {
    block("### Instruction:", instruction);
    block("### Input:", input);
  } else {
    block("### Input:", input);
    block("### Instruction:", instruction);
  }
  block("### Question:", question);
  out += "### Response:";
  return out;
}

std::string format_label_response(std::span<const std::string> labels, bool bracketed) {
  if (labels.empty()) return {};
  return join(labels, ", ", bracketed) + ".";
}

std::string format_answer_response(std::span<const std::string> answers) {
  std::string out = join(answers, ", ", false);
  if (!out.empty() && out.back() != '.') out += '.';
  return out;
}

}  // namespace tabprompt
