#include "mepath/cv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "mepath/error.hpp"
#include "mepath/parallel.hpp"
#include "mepath/random.hpp"

namespace mepath {

namespace {

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed,
                                            std::uint64_t stream) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  SplitMix64 rng(derive_seed(seed, {stream}));
  // Fisher-Yates with an explicit bounded draw so the permutation only
  // depends on (seed, n).
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
  }
  return perm;
}

Split split_on_items(const ComparisonDataset& dataset,
                     const std::vector<bool>& held_out) {
  Split split;
  const auto records = dataset.records();
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (held_out[records[k].left] || held_out[records[k].right]) {
      split.test.push_back(k);
    } else {
      split.train.push_back(k);
    }
  }
  return split;
}

double sign_error(double pred, double outcome) {
  if (pred == 0.0 || outcome == 0.0) return 0.5;
  return (pred > 0.0) == (outcome > 0.0) ? 0.0 : 1.0;
}

}  // namespace

std::string_view split_name(SplitMode mode) {
  return mode == SplitMode::kByRecord ? "record" : "item";
}

SplitMode parse_split(std::string_view name) {
  if (name == "record") return SplitMode::kByRecord;
  if (name == "item") return SplitMode::kByItem;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown split mode '" + std::string(name) + "' (record, item)");
}

Split split_by_items(const ComparisonDataset& dataset, double train_fraction,
                     std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "train fraction must be in (0, 1)");
  }
  const std::size_t n = dataset.n_items();
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(n)));
  const auto perm = seeded_permutation(n, seed, 0x17e5);
  std::vector<bool> held_out(n, false);
  for (std::size_t i = n_train; i < n; ++i) held_out[perm[i]] = true;
  return split_on_items(dataset, held_out);
}

std::vector<Split> make_folds(const ComparisonDataset& dataset,
                              std::size_t folds, SplitMode mode,
                              std::uint64_t seed) {
  if (folds < 2) {
    throw Error(ErrorCode::kInvalidConfig, "need at least two folds");
  }
  std::vector<Split> out(folds);
  if (mode == SplitMode::kByRecord) {
    const auto perm = seeded_permutation(dataset.size(), seed, 0xf01d);
    std::vector<std::size_t> fold_of(dataset.size());
    for (std::size_t p = 0; p < perm.size(); ++p) fold_of[perm[p]] = p % folds;
    for (std::size_t k = 0; k < dataset.size(); ++k) {
      for (std::size_t f = 0; f < folds; ++f) {
        (fold_of[k] == f ? out[f].test : out[f].train).push_back(k);
      }
    }
  } else {
    const auto perm = seeded_permutation(dataset.n_items(), seed, 0xf01e);
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<bool> held_out(dataset.n_items(), false);
      for (std::size_t p = f; p < perm.size(); p += folds) held_out[perm[p]] = true;
      out[f] = split_on_items(dataset, held_out);
    }
  }
  for (std::size_t f = 0; f < folds; ++f) {
    if (out[f].test.empty() || out[f].train.empty()) {
      throw Error(ErrorCode::kEmptyFold,
                  "fold " + std::to_string(f) + " has an empty " +
                      (out[f].test.empty() ? "test" : "training") + " side");
    }
  }
  return out;
}

CvReport run_cv(const ComparisonDataset& dataset,
                const SolverConfig& solver_config, const CvConfig& cv_config) {
  const std::vector<Split> splits = make_folds(
      dataset, cv_config.folds, cv_config.split_mode, cv_config.seed);

  CvReport report;
  if (cv_config.t_grid.empty()) {
    if (cv_config.grid_points < 1) {
      throw Error(ErrorCode::kInvalidConfig, "grid needs at least one point");
    }
    report.pilot = fit(dataset, solver_config);
    const double t_max = report.pilot->t_max();
    const std::size_t n = cv_config.grid_points;
    for (std::size_t i = 0; i < n; ++i) {
      report.t_grid.push_back(
          n == 1 ? t_max : t_max * static_cast<double>(i) / static_cast<double>(n - 1));
    }
  } else {
    report.t_grid = cv_config.t_grid;
    for (std::size_t i = 0; i < report.t_grid.size(); ++i) {
      if (!(report.t_grid[i] >= 0.0) ||
          (i > 0 && !(report.t_grid[i] > report.t_grid[i - 1]))) {
        throw Error(ErrorCode::kInvalidConfig,
                    "t grid must be nonnegative and strictly increasing");
      }
    }
  }

  // Folds resolve their own alpha, so a time-bounded fold has to aim at the
  // last grid point rather than the requested t_max (the pilot overshoots it).
  // An explicit grid with an iteration budget keeps the budget and may fail
  // with GridExceedsPath.
  SolverConfig fold_config = solver_config;
  if (cv_config.t_grid.empty() || fold_config.t_max) {
    fold_config.t_max = report.t_grid.back();
  }

  report.errors.assign(splits.size(), std::vector<double>(report.t_grid.size()));
  for (std::size_t f = 0; f < splits.size(); ++f) {
    const ComparisonDataset train = dataset.subset(splits[f].train);
    const ComparisonDataset test = dataset.subset(splits[f].test);
    const RegularizationPath path = fit(train, fold_config);
    if (report.t_grid.back() > path.t_max()) {
      throw Error(ErrorCode::kGridExceedsPath,
                  "grid reaches t = " + std::to_string(report.t_grid.back()) +
                      " but fold " + std::to_string(f) + " path ends at " +
                      std::to_string(path.t_max()));
    }
    for (std::size_t i = 0; i < report.t_grid.size(); ++i) {
      const ModelState state = interpolate_state(path, report.t_grid[i]);
      report.errors[f][i] = mismatch_ratio(state, test, true);
    }
  }

  report.mean_errors.assign(report.t_grid.size(), 0.0);
  for (std::size_t i = 0; i < report.t_grid.size(); ++i) {
    double sum = 0.0;
    for (const auto& row : report.errors) sum += row[i];
    report.mean_errors[i] = sum / static_cast<double>(report.errors.size());
  }
  const auto best =
      std::min_element(report.mean_errors.begin(), report.mean_errors.end());
  report.t_cv_index = static_cast<std::size_t>(best - report.mean_errors.begin());
  report.t_cv = report.t_grid[report.t_cv_index];
  report.tie_policy_applied =
      std::count(report.mean_errors.begin(), report.mean_errors.end(), *best) > 1;
  return report;
}

std::vector<ScoredRecord> scored_records(const ComparisonDataset& dataset) {
  std::vector<ScoredRecord> out(dataset.size());
  const auto original = dataset.original_index();
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    out[original[k]] = {dataset.user()[k], dataset.left()[k], dataset.right()[k],
                        dataset.outcome()[k]};
  }
  return out;
}

double mismatch_ratio(const ModelState& state, const FeatureMatrix& features,
                      std::span<const ScoredRecord> records, bool personalized) {
  if (records.empty()) {
    throw Error(ErrorCode::kEmptyTestSet, "no test records");
  }
  if (features.cols() != state.dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "state dimension does not match features");
  }
  std::vector<double> coef(state.dim);
  double errors = 0.0;
  for (const ScoredRecord& r : records) {
    if (r.left >= features.rows() || r.right >= features.rows()) {
      throw Error(ErrorCode::kItemIndexOutOfRange, "test record item out of range");
    }
    double pred;
    if (personalized && r.user) {
      if (*r.user >= state.n_users) {
        throw Error(ErrorCode::kDimensionMismatch, "test record user out of range");
      }
      const auto xi = state.xi_of(*r.user);
      for (std::size_t j = 0; j < state.dim; ++j) coef[j] = state.eta[j] + xi[j];
      pred = features.diff_dot(r.left, r.right, coef.data()) + state.gamma[*r.user];
    } else {
      pred = features.diff_dot(r.left, r.right, state.eta.data());
    }
    errors += sign_error(pred, r.outcome);
  }
  return errors / static_cast<double>(records.size());
}

double mismatch_ratio(const ModelState& state, const ComparisonDataset& test,
                      bool personalized) {
  const auto records = scored_records(test);
  return mismatch_ratio(state, test.features(), records, personalized);
}

double mismatch_ratio(const Scores& scores, std::span<const ScoredRecord> records,
                      bool personalized) {
  if (records.empty()) {
    throw Error(ErrorCode::kEmptyTestSet, "no test records");
  }
  double errors = 0.0;
  for (const ScoredRecord& r : records) {
    const std::vector<double>& row =
        personalized && r.user && *r.user < scores.personalized.size()
            ? scores.personalized[*r.user]
            : scores.common;
    if (r.left >= row.size() || r.right >= row.size()) {
      throw Error(ErrorCode::kItemIndexOutOfRange, "test record item out of range");
    }
    errors += sign_error(row[r.left] - row[r.right], r.outcome);
  }
  return errors / static_cast<double>(records.size());
}

double mismatch_ratio(const Scores& scores, const ComparisonDataset& test,
                      bool personalized) {
  const auto records = scored_records(test);
  return mismatch_ratio(scores, records, personalized);
}

}  // namespace mepath
