#include "tabprompt/tokenizer.hpp"

namespace tabprompt {
namespace {

constexpr bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

constexpr bool is_split(char c) noexcept {
  return c == '|' || c == '[' || c == ']' || c == ':' || c == ',';
}

}  // namespace

std::size_t ReferenceTokenizer::count(std::string_view text) const {
  std::size_t tokens = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (is_split(c)) {
      ++tokens;
      in_word = false;
    } else if (!in_word) {
      ++tokens;
      in_word = true;
    }
  }
  return tokens;
}

const ReferenceTokenizer& ReferenceTokenizer::instance() noexcept {
  static const ReferenceTokenizer tok;
  return tok;
}

}  // namespace tabprompt
