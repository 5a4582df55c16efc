#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mepath/dataset.hpp"
#include "mepath/losses.hpp"
#include "mepath/model.hpp"
#include "mepath/penalty.hpp"

namespace mepath {

struct SolverConfig {
  LossFamily family = LossFamily::kBradleyTerry;
  // Unset: group penalty for identity features, entrywise otherwise.
  std::optional<PenaltyMode> mode;
  double kappa = 100.0;
  // Unset: alpha = m / (kappa * ||d Phi Phi^T d^T + X X^T||_2).
  std::optional<double> alpha;
  std::size_t max_iters = 1000;
  // When set, the run stops at the first iteration with t >= t_max and
  // max_iters is ignored.
  std::optional<double> t_max;
  std::size_t record_every = 10;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double tol_spectral = 1e-4;
};

enum class BlockKind { kDeviation, kBias };

struct SupportEvent {
  double t = 0.0;
  std::size_t iteration = 0;
  BlockKind block = BlockKind::kDeviation;
  std::size_t user = 0;
  bool entered = true;

  friend bool operator==(const SupportEvent&, const SupportEvent&) = default;
};

struct PathPoint {
  std::size_t iteration = 0;
  ModelState state;  // state.t == iteration * alpha

  friend bool operator==(const PathPoint&, const PathPoint&) = default;
};

struct RegularizationPath {
  SolverConfig config;  // as requested
  PenaltyMode mode = PenaltyMode::kGroupSparse;  // resolved
  double alpha = 0.0;                            // resolved
  double spectral_norm = 0.0;
  std::size_t iterations = 0;
  std::vector<PathPoint> points;
  std::vector<SupportEvent> events;

  double t_max() const { return points.empty() ? 0.0 : points.back().state.t; }
};

// Called with every iterate, starting from the zero state at k = 0.
using IterationObserver =
    std::function<void(std::size_t iteration, const ModelState& state)>;

enum class GramPart {
  kFull,        // d Phi Phi^T d^T + X X^T
  kCommonOnly,  // d Phi Phi^T d^T
};

// Largest eigenvalue of the Gram operator via power iteration through the
// implicit design operators. Deterministic for a given seed. Throws
// NoConvergence after 10000 iterations.
double spectral_norm(const ComparisonDataset& dataset, double tol,
                     std::uint64_t seed = 0, GramPart part = GramPart::kFull);

// Resolved step parameters shared by the serial and parallel solvers.
struct StepPlan {
  PenaltyMode mode = PenaltyMode::kGroupSparse;
  double alpha = 0.0;
  double spectral_norm = 0.0;
  std::size_t iterations = 0;
};

// Validates the config against the dataset, estimates the spectral norm and
// resolves alpha and the iteration count. Throws StepSizeTooLarge when
// alpha * kappa * norm / m >= 2.
StepPlan plan_steps(const ComparisonDataset& dataset,
                    const SolverConfig& config);

// Serial Linearized Bregman path from the zero state.
RegularizationPath fit_path(const ComparisonDataset& dataset,
                            const SolverConfig& config,
                            const IterationObserver& observer = {});

struct BaselineOptions {
  double gradient_tol = 1e-8;
  std::size_t max_iters = 1'000'000;
  std::uint64_t seed = 0;
};

// Common-only fit (xi = 0, gamma = 0) by gradient descent until the gradient
// norm drops below the tolerance. Throws NoConvergence otherwise.
ModelState fit_common_only(const ComparisonDataset& dataset, LossFamily family,
                           const BaselineOptions& options = {});

// HodgeRank comparator: scores of the common-only fit.
Scores hodgerank_baseline(const ComparisonDataset& dataset, LossFamily family,
                          const BaselineOptions& options = {});

// Linear interpolation of (eta, z) between the snapshots bracketing t_query,
// followed by shrinkage. A query equal to a recorded t returns that snapshot
// unchanged. Throws OutOfRange outside [0, path.t_max()].
ModelState interpolate_state(const RegularizationPath& path, double kappa,
                             PenaltyMode mode, double t_query);
ModelState interpolate_state(const RegularizationPath& path, double t_query);

}  // namespace mepath
