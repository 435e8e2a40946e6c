#pragma once

#include <cstddef>
#include <string_view>

namespace tabprompt {

/// Token counting contract. Implementations must be safe for concurrent
/// count() calls, return 0 for empty text and satisfy
/// count(a + b) <= count(a) + count(b) + 1.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::size_t count(std::string_view text) const = 0;
};

/// Counts maximal runs of non-whitespace; '|', '[', ']', ':' and ','
/// always stand alone. "row 1: | Wins |" is six tokens.
class ReferenceTokenizer final : public Tokenizer {
 public:
  std::size_t count(std::string_view text) const override;

  static const ReferenceTokenizer& instance() noexcept;
};

inline std::size_t count_tokens(std::string_view text, const Tokenizer& tok) {
  return tok.count(text);
}

}  // namespace tabprompt
