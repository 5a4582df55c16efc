#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mepath/dataset.hpp"
#include "mepath/lbi.hpp"
#include "mepath/model.hpp"

namespace mepath {

enum class SplitMode { kByRecord, kByItem };

std::string_view split_name(SplitMode mode);  // "record", "item"
SplitMode parse_split(std::string_view name);

struct CvConfig {
  std::size_t folds = 5;
  // Empty: grid_points values spread uniformly over [0, t_max] of a pilot
  // path fitted on the full data.
  std::vector<double> t_grid;
  std::size_t grid_points = 50;
  SplitMode split_mode = SplitMode::kByRecord;
  std::uint64_t seed = 0;
};

struct CvReport {
  std::vector<double> t_grid;
  std::vector<std::vector<double>> errors;  // folds x grid
  std::vector<double> mean_errors;
  std::size_t t_cv_index = 0;
  double t_cv = 0.0;
  bool tie_policy_applied = false;  // several grid points share the minimum
  std::optional<RegularizationPath> pilot;  // set when the grid was automatic
};

// Train/test record indices (input order).
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Shuffles the items with `seed`, keeps round(train_fraction * n) of them for
// training and sends every comparison touching a held-out item to the test
// side.
Split split_by_items(const ComparisonDataset& dataset, double train_fraction,
                     std::uint64_t seed);

// Fold k's test side is the k-th slice of a seeded permutation of records
// (by_record) or every record touching the k-th slice of a seeded permutation
// of items (by_item); training is everything not touching it. Throws
// EmptyFold if a side comes out empty.
std::vector<Split> make_folds(const ComparisonDataset& dataset,
                              std::size_t folds, SplitMode mode,
                              std::uint64_t seed);

// K-fold cross-validation of the path time. Each fold's path is fitted up to
// the last grid point; errors are personalized mismatch ratios on the held
// out records. Ties on the mean error go to the smallest t.
CvReport run_cv(const ComparisonDataset& dataset,
                const SolverConfig& solver_config, const CvConfig& cv_config);

// A record ready for scoring. `user` is empty for users the model has never
// seen, which then fall back to the common predictor.
struct ScoredRecord {
  std::optional<std::size_t> user;
  std::size_t left = 0;
  std::size_t right = 0;
  double outcome = 0.0;
};

std::vector<ScoredRecord> scored_records(const ComparisonDataset& dataset);

// Fraction of records whose predicted sign disagrees with the outcome sign;
// a zero prediction (or zero outcome) counts one half. The personalized
// predictor adds xi_u and gamma_u for known users; the common predictor uses
// eta alone. Throws EmptyTestSet.
double mismatch_ratio(const ModelState& state, const FeatureMatrix& features,
                      std::span<const ScoredRecord> records, bool personalized);
double mismatch_ratio(const ModelState& state, const ComparisonDataset& test,
                      bool personalized);
// Score-based variant: item score differences, no bias term.
double mismatch_ratio(const Scores& scores, std::span<const ScoredRecord> records,
                      bool personalized);
double mismatch_ratio(const Scores& scores, const ComparisonDataset& test,
                      bool personalized);

}  // namespace mepath
