#include "tabprompt/response_parser.hpp"

#include <algorithm>
#include <unordered_map>

#include "tabprompt/backend.hpp"

namespace tabprompt {
namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string_view strip_period(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.back() == '.') s.remove_suffix(1);
  return trim(s);
}

std::string_view strip_brackets(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '<' && s.back() == '>') s = trim(s.substr(1, s.size() - 2));
  return s;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

int max_generation_tokens(Task task) noexcept {
  switch (task) {
    case Task::RowPopulation: return 512;
    case Task::HighlightedCellsQa:
    case Task::SchemaAugmentation: return 128;
    default: return 64;
  }
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>((c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c);
  }
  return out;
}

MultiLabelParse parse_multilabel(std::string_view response, std::span<const std::string> options) {
  MultiLabelParse result;
  std::string_view body = strip_period(response);
  if (body.empty()) return result;

  std::vector<std::string_view> fragments;
  if (body.find('<') != std::string_view::npos && body.find('>') != std::string_view::npos) {
    std::string_view rest = body;
    while (!rest.empty()) {
      auto open = rest.find('<');
      auto close = open == std::string_view::npos ? open : rest.find('>', open);
      auto outside = rest.substr(0, std::min(open, rest.size()));
      for (auto part : split_commas(outside))
        if (!trim(part).empty()) fragments.push_back(part);
      if (close == std::string_view::npos) {
        if (open != std::string_view::npos) fragments.push_back(rest.substr(open));
        break;
      }
      fragments.push_back(rest.substr(open, close - open + 1));
      rest = rest.substr(close + 1);
    }
  } else {
    fragments = split_commas(body);
  }

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < options.size(); ++i)
    index.emplace(normalize_text(strip_brackets(options[i])), i);

  std::vector<bool> hit(options.size(), false);
  for (auto fragment : fragments) {
    auto cleaned = strip_brackets(strip_period(fragment));
    if (cleaned.empty()) continue;
    auto it = index.find(normalize_text(cleaned));
    if (it == index.end()) {
      ++result.unmatched;
      continue;
    }
    hit[it->second] = true;
  }
  for (std::size_t i = 0; i < options.size(); ++i)
    if (hit[i]) result.labels.push_back(options[i]);
  return result;
}

std::vector<std::string> parse_ranked_list(std::string_view response,
                                           std::span<const std::string> candidates) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    index.emplace(normalize_text(candidates[i]), i);

  std::vector<bool> used(candidates.size(), false);
  std::vector<std::string> out;
  out.reserve(candidates.size());
  std::size_t pos = 0;
  while (pos < response.size()) {
    auto open = response.find('<', pos);
    if (open == std::string_view::npos) break;
    auto close = response.find('>', open + 1);
    if (close == std::string_view::npos) break;
    auto it = index.find(normalize_text(response.substr(open + 1, close - open - 1)));
    if (it != index.end() && !used[it->second]) {
      used[it->second] = true;
      out.push_back(candidates[it->second]);
    }
    pos = close + 1;
  }
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (!used[i]) out.push_back(candidates[i]);
  return out;
}

}  // namespace tabprompt
