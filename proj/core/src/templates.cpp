#include "tabprompt/templates.hpp"

#include <fstream>
#include <sstream>

#include "tabprompt/error.hpp"

namespace tabprompt {
namespace {

bool is_ident_char(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

TemplateRegistry make_builtin() {
  TemplateRegistry reg;
  reg.set("column-type-annotation",
          {"This is a column type annotation task. The goal for this task is to choose the "
           "correct types for one selected column of the table from the given candidates. The "
           "Wikipedia page, section and table caption (if any) provide important information "
           "for choosing the correct column types.",
           "The column '{column}' contains the following entities: {entities}, etc. The column "
           "type candidates are: {candidates}. What are the correct column types for this "
           "column (column name: {column}; entities: {entities}, etc)?",
           ""});
  reg.set("relation-extraction",
          {"This is a relation extraction task. The goal for this task is to choose the correct "
           "relations between two selected columns of the table from the given candidates. The "
           "Wikipedia page, section and table caption (if any) provide important information "
           "for choosing the correct relation types.",
           "The two selected column names are: <({subject_column}),({object_column})>. The "
           "entity pairs for these two columns are: {entity_pairs}, etc. The relation type "
           "candidates are: {candidates}. What are the correct relation types for the two "
           "selected columns (column names: <({subject_column}),({object_column})>. entity "
           "pairs: {entity_pairs}, etc)?",
           ""});
  reg.set("entity-linking",
          {"This is an entity linking task. The goal for this task is to link the selected "
           "entity mention in the table cells to the entity in the knowledge base. You will be "
           "given a list of referent entities, with each one composed of an entity name, its "
           "description and its type. Please choose the correct one from the referent entity "
           "candidates. Note that the Wikipedia page, Wikipedia section and table caption (if "
           "any) provide important information for choosing the correct referent entity.",
           "The selected entity mention in the table cell is: {mention}. The column name for "
           "'{mention}' is {column}. The referent entity candidates are: {candidates}. What is "
           "the correct referent entity for the entity mention '{mention}' ?",
           ""});
  reg.set("row-population",
          {"This is a table row population task. The goal of this task is to populate the "
           "possible entities of the selected column for a table, given the Wikipedia page "
           "title, Wikipedia section title, table caption (if any) and table headers. You will "
           "be given a list of entity candidates. Please rank them so that the most likely "
           "entities come first.",
           "The entity candidates are: {candidates}.",
           "The table headers are: {headers}. You need to populate the column: {column}. [SEED] "
           "The seed entity is <{seed}>."});
  reg.set("schema-augmentation",
          {"This is a table schema augmentation task. The goal of this task is to populate the "
           "possible headers for a table, given the table caption and the seed table header. "
           "You will be given a list of table header candidates. Please rank them so that the "
           "most likely headers come first.",
           "The header candidates are: {candidates}. Please rank the headers in the header "
           "candidates.",
           "[SEED] The seed table header is <{seed}>."});
  reg.set("hierarchical-qa",
          {"This is a hierarchical table question answering task. The goal for this task is to "
           "answer the given question based on the given table. The table might be "
           "hierarchical.",
           "{question}", ""});
  reg.set("highlighted-cells-qa",
          {"This is a free-form table question answering task. The goal for this task is to "
           "answer the given question based on the given table and the highlighted cells.",
           "The highlighted cells of the table are: [HIGHLIGHTED_BEGIN] {highlighted} "
           "[HIGHLIGHTED_END] {question}",
           ""});
  reg.set("fact-verification",
          {"This is a table fact verification task. The goal of this task is to distinguish "
           "whether the given statement is entailed or refuted by the given table.",
           "The statement is: <{statement}>. Is it entailed or refuted by the table above?", ""});

  // Inference-only extras.
  reg.set("hybrid-qa",
          {"This is a hybrid question answering task. The goal of this task is to answer the "
           "question given tables and passages.",
           "{question}", "passages: {passages}"});
  reg.set("table-dialogue",
          {"This is a dialogue response generation task grounded on tables. The goal of this "
           "task is to generate response based on the given dialogue history and the given "
           "table. The dialogues are grounded through underlying tables and span three distinct "
           "tasks in the in-car personal assistant space: calendar scheduling, weather "
           "information retrieval, and point-of-interest navigation.",
           "The dialogue history is: <{dialogue}>. Please generate the response based on the "
           "given table and the given dialogue history.",
           ""});
  reg.set("cells-description",
          {"This is a highlighted cells description task. The goal of this task is to generate "
           "the language description given table cells.",
           "Please generate one natural language description to describe the given highlighted "
           "table cells.",
           ""});
  reg.set("feverous",
          {"This is a table fact verification task. The goal of this task is to distinguish "
           "whether the given statement is entailed or refuted by the given table.",
           "The statement is: <{statement}>. Is it entailed or refuted by the table above? If "
           "you think the current information can not provide enough evidence for determining "
           "it, please choose 'not enough info', otherwise please choose the answer from "
           "'supports' or 'refutes'.",
           ""});
  reg.set("table-qa",
          {"This is a table QA task. The goal of this task is to answer the question given the "
           "table.",
           "{question}", ""});
  return reg;
}

bool read_override(const std::filesystem::path& file, std::string& target) {
  if (!std::filesystem::is_regular_file(file)) return false;
  std::ifstream in(file);
  if (!in) throw DataError("cannot read template file '" + file.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  target = buf.str();
  if (!target.empty() && target.back() == '\n') target.pop_back();
  if (!target.empty() && target.back() == '\r') target.pop_back();
  if (!placeholders_balanced(target))
    throw DataError("unbalanced placeholder in template file '" + file.string() + "'");
  return true;
}

}  // namespace

TemplateRegistry TemplateRegistry::builtin() {
  static const TemplateRegistry reg = make_builtin();
  return reg;
}

TemplateRegistry TemplateRegistry::with_overrides(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw DataError("template directory '" + dir.string() + "' does not exist");
  TemplateRegistry reg = builtin();
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    for (const auto* suffix : {".instruction.txt", ".question.txt", ".input.txt"}) {
      const std::string_view sfx(suffix);
      if (name.size() > sfx.size() && name.ends_with(sfx)) {
        auto id = name.substr(0, name.size() - sfx.size());
        auto& tmpl = reg.templates_[id];
        std::string* field = sfx == ".instruction.txt" ? &tmpl.instruction
                             : sfx == ".question.txt"  ? &tmpl.question
                                                       : &tmpl.input_suffix;
        read_override(entry.path(), *field);
      }
    }
  }
  return reg;
}

const TaskTemplate& TemplateRegistry::get(std::string_view id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw DataError("no template for task '" + std::string(id) + "'");
  return it->second;
}

void TemplateRegistry::set(std::string id, TaskTemplate tmpl) {
  templates_[std::move(id)] = std::move(tmpl);
}

std::vector<std::string> TemplateRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, tmpl] : templates_) out.push_back(id);
  return out;
}

bool placeholders_balanced(std::string_view tmpl) noexcept {
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '}') return false;
    if (tmpl[i] != '{') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < tmpl.size() && is_ident_char(tmpl[j])) ++j;
    if (j == i + 1 || j >= tmpl.size() || tmpl[j] != '}') return false;
    i = j + 1;
  }
  return true;
}

std::vector<std::string> placeholder_names(std::string_view tmpl) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '{') continue;
    auto close = tmpl.find('}', i);
    if (close == std::string_view::npos) break;
    names.emplace_back(tmpl.substr(i + 1, close - i - 1));
    i = close;
  }
  return names;
}

std::string fill_template(std::string_view tmpl, const TemplateValues& values) {
  if (!placeholders_balanced(tmpl))
    throw DataError("unbalanced placeholder in template: " + std::string(tmpl));
  std::string out;
  out.reserve(tmpl.size() * 2);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '{') {
      out.push_back(tmpl[i++]);
      continue;
    }
    auto close = tmpl.find('}', i);
    auto name = tmpl.substr(i + 1, close - i - 1);
    auto it = values.find(name);
    if (it == values.end())
      throw DataError("placeholder '{" + std::string(name) + "}' left unfilled");
    out += it->second;
    i = close + 1;
  }
  return out;
}

}  // namespace tabprompt
