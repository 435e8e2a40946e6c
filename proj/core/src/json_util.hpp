#pragma once

// Shared JSON helpers for the JSONL readers. Private to the core library.

#include <json.hpp>

#include <string>
#include <vector>

#include "tabprompt/error.hpp"

namespace tabprompt::detail {

using nlohmann::json;

inline std::string line_prefix(std::size_t line) {
  return "line " + std::to_string(line) + ": ";
}

inline json parse_line(const std::string& text, std::size_t line) {
  try {
    auto value = json::parse(text);
    if (!value.is_object()) throw DataError(line_prefix(line) + "expected a JSON object");
    return value;
  } catch (const json::parse_error& e) {
    throw DataError(line_prefix(line) + "malformed JSON (" + e.what() + ")");
  }
}

inline std::string get_string(const json& obj, const char* field, std::size_t line,
                              bool required = true) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    if (required) throw DataError(line_prefix(line) + "missing field '" + field + "'");
    return {};
  }
  if (!it->is_string())
    throw DataError(line_prefix(line) + "field '" + field + "' must be a string");
  return it->get<std::string>();
}

inline std::vector<std::string> get_string_list(const json& obj, const char* field,
                                                std::size_t line, bool required = true) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    if (required) throw DataError(line_prefix(line) + "missing field '" + field + "'");
    return {};
  }
  if (!it->is_array())
    throw DataError(line_prefix(line) + "field '" + field + "' must be an array");
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string())
      throw DataError(line_prefix(line) + "field '" + field + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

inline bool is_blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace tabprompt::detail
