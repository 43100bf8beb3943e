// include/sfl/transducer/wer.h

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sfl {

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;

  std::size_t total() const { return substitutions + insertions + deletions; }
};

// Minimum-cost alignment of hypothesis to reference with unit costs. Among
// optimal alignments, substitutions are preferred over insert/delete pairs.
EditCounts edit_counts(std::span<const std::string> reference,
                       std::span<const std::string> hypothesis);

inline std::size_t edit_distance(std::span<const std::string> a,
                                 std::span<const std::string> b) {
  return edit_counts(a, b).total();
}

// errors / reference_words, kept as a fraction.
struct WerResult {
  EditCounts counts;
  std::size_t reference_words = 0;

  std::size_t errors() const { return counts.total(); }
  double rate() const {
    return static_cast<double>(errors()) / static_cast<double>(reference_words);
  }
};

// Throws UndefinedMetricError for an empty reference.
WerResult wer(std::span<const std::string> reference,
              std::span<const std::string> hypothesis);

std::vector<std::string> SplitWords(std::string_view text);

}  // namespace sfl
