#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mepath/dataset.hpp"
#include "mepath/lbi.hpp"
#include "mepath/model.hpp"

namespace mepath {

// First time each user's block became nonzero on the path, if ever.
std::vector<std::optional<double>> first_entry_times(
    const RegularizationPath& path, BlockKind block);

// Users ordered by the first entry time of their deviation block. Users that
// never enter come last; ties go to the lower user index.
std::vector<std::size_t> deviation_ranking(const RegularizationPath& path);

struct BiasRow {
  std::size_t user = 0;
  double gamma = 0.0;
  std::size_t left_count = 0;   // records where the left item won
  std::size_t right_count = 0;  // records where the right item won
  std::optional<double> first_entry;
};

// One row per user. Users with nonzero gamma come first, ordered by first
// bias-entry time when a path is given and by |gamma| (descending)
// otherwise; remaining ties go to the lower user index.
std::vector<BiasRow> bias_report(const ModelState& state,
                                 const ComparisonDataset& dataset,
                                 const RegularizationPath* path = nullptr);

// Item ranks per row: the common scores first, then one row per requested
// user. Rank 1 is the highest score; equal scores share a rank and the next
// distinct score takes the following integer (dense ranking).
std::vector<std::vector<std::size_t>> rank_compare(
    const Scores& scores, std::span<const std::size_t> users);

std::vector<std::size_t> dense_ranks(std::span<const double> scores);

}  // namespace mepath
