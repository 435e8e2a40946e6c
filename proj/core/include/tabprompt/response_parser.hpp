#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tabprompt {

struct MultiLabelParse {
  /// Matched options, in option order, without duplicates.
  std::vector<std::string> labels;
  /// Response fragments that matched no option.
  std::size_t unmatched = 0;
};

/// Maps a free-text answer onto `options`. Angle-bracketed items are taken
/// whole when present (so commas inside an entity description survive);
/// otherwise the text is split on commas. Fragments are trimmed, lose one
/// trailing period and match options case-insensitively. Empty input gives
/// an empty set.
MultiLabelParse parse_multilabel(std::string_view response, std::span<const std::string> options);

/// Extracts `<...>` items in order and matches them to candidates
/// (case-insensitive, whitespace-normalized), keeping first mentions and
/// appending unmentioned candidates in their original order. Always a full
/// permutation of `candidates`.
std::vector<std::string> parse_ranked_list(std::string_view response,
                                           std::span<const std::string> candidates);

/// Lowercase, whitespace runs collapsed to one space, trimmed.
std::string normalize_text(std::string_view text);

}  // namespace tabprompt
