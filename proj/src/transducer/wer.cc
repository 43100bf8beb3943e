// src/transducer/wer.cc

#include "sfl/transducer/wer.h"

#include <sstream>

#include "sfl/numerics/errors.h"

namespace sfl {

EditCounts edit_counts(std::span<const std::string> reference,
                       std::span<const std::string> hypothesis) {
  const std::size_t n = reference.size(), m = hypothesis.size();
  // cost[i][j] aligns reference[:i] with hypothesis[:j]; counts ride along.
  struct Cell {
    std::size_t cost;
    EditCounts counts;
  };
  std::vector<Cell> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = {j, {0, j, 0}};
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = {i, {0, 0, i}};
    for (std::size_t j = 1; j <= m; ++j) {
      const bool same = reference[i - 1] == hypothesis[j - 1];
      Cell best = prev[j - 1];
      best.cost += same ? 0 : 1;
      if (!same) ++best.counts.substitutions;
      if (prev[j].cost + 1 < best.cost) {
        best = prev[j];
        ++best.cost;
        ++best.counts.deletions;
      }
      if (cur[j - 1].cost + 1 < best.cost) {
        best = cur[j - 1];
        ++best.cost;
        ++best.counts.insertions;
      }
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  return prev[m].counts;
}

WerResult wer(std::span<const std::string> reference,
              std::span<const std::string> hypothesis) {
  if (reference.empty()) {
    throw UndefinedMetricError("word error rate of an empty reference");
  }
  return {edit_counts(reference, hypothesis), reference.size()};
}

std::vector<std::string> SplitWords(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

}  // namespace sfl
