#include "mepath/lbi.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "lbi_kernel.hpp"
#include "mepath/error.hpp"
#include "mepath/random.hpp"

namespace mepath {

namespace detail {

LbiKernel::LbiKernel(const ComparisonDataset& dataset, LossFamily family,
                     PenaltyMode mode, double kappa, double alpha)
    : dataset_(dataset),
      family_(family),
      mode_(mode),
      kappa_(kappa),
      z_step_(alpha / static_cast<double>(dataset.size())),
      eta_step_(alpha * kappa / static_cast<double>(dataset.size())),
      accum_(dataset.n_users() * dataset.dim(), 0.0) {}

SupportChange LbiKernel::user_step(ModelState& state, std::size_t u,
                                   std::vector<double>& coef) {
  const std::size_t dim = state.dim;
  const FeatureMatrix& phi = dataset_.features();
  const auto y = dataset_.outcome();
  const auto w = dataset_.weight();
  const auto left = dataset_.left();
  const auto right = dataset_.right();

  std::span<double> xi = state.xi_of(u);
  std::span<double> z_xi = state.z_xi_of(u);
  double* a = accum_.data() + u * dim;

  coef.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    coef[j] = state.eta[j] + xi[j];
    a[j] = 0.0;
  }
  const double bias = state.gamma[u];
  double c = 0.0;
  for (std::size_t k = dataset_.user_begin(u); k < dataset_.user_end(u); ++k) {
    const double pred = phi.diff_dot(left[k], right[k], coef.data()) + bias;
    const double g = w[k] * record_residual(family_, y[k], pred);
    phi.diff_axpy(g, left[k], right[k], a);
    c += g;
  }

  const bool deviation_before = state.deviation_nonzero(u);
  const bool bias_before = state.gamma[u] != 0.0;
  for (std::size_t j = 0; j < dim; ++j) z_xi[j] -= z_step_ * a[j];
  state.z_gamma[u] -= z_step_ * c;
  shrink_block(mode_, kappa_, z_xi, xi);
  state.gamma[u] = shrink_scalar(kappa_, state.z_gamma[u]);

  const bool deviation_after = state.deviation_nonzero(u);
  const bool bias_after = state.gamma[u] != 0.0;
  SupportChange change;
  change.deviation = static_cast<std::int8_t>(deviation_after - deviation_before);
  change.bias = static_cast<std::int8_t>(bias_after - bias_before);
  return change;
}

void LbiKernel::eta_step(ModelState& state, std::size_t j_begin,
                         std::size_t j_end) const {
  const std::size_t dim = state.dim;
  const std::size_t n_users = state.n_users;
  for (std::size_t j = j_begin; j < j_end; ++j) {
    double s = 0.0;
    for (std::size_t u = 0; u < n_users; ++u) s += accum_[u * dim + j];
    state.eta[j] -= eta_step_ * s;
  }
}

PathRecorder::PathRecorder(RegularizationPath& path, std::size_t record_every)
    : path_(path), record_every_(record_every) {}

void PathRecorder::start(const ModelState& zero_state) {
  path_.points.push_back({0, zero_state});
}

void PathRecorder::finish_iteration(std::size_t iteration,
                                    const ModelState& state,
                                    const std::vector<SupportChange>& changes) {
  bool changed = false;
  for (std::size_t u = 0; u < changes.size(); ++u) {
    if (changes[u].deviation != 0) {
      path_.events.push_back({state.t, iteration, BlockKind::kDeviation, u,
                              changes[u].deviation > 0});
      changed = true;
    }
    if (changes[u].bias != 0) {
      path_.events.push_back({state.t, iteration, BlockKind::kBias, u,
                              changes[u].bias > 0});
      changed = true;
    }
  }
  if (changed || iteration % record_every_ == 0 ||
      iteration == path_.iterations) {
    path_.points.push_back({iteration, state});
  }
}

}  // namespace detail

namespace {

// y = M^T M x in parameter space, where M = [d Phi, X] (or [d Phi] alone).
// The nonzero spectrum matches that of M M^T.
void apply_gram(const ComparisonDataset& ds, GramPart part,
                const ModelState& x, ModelState& y,
                std::vector<double>& coef) {
  const FeatureMatrix& phi = ds.features();
  const auto left = ds.left();
  const auto right = ds.right();
  const std::size_t dim = ds.dim();
  const bool full = part == GramPart::kFull;
  std::fill(y.eta.begin(), y.eta.end(), 0.0);
  coef.resize(dim);
  for (std::size_t u = 0; u < ds.n_users(); ++u) {
    const auto xi = x.xi_of(u);
    for (std::size_t j = 0; j < dim; ++j) coef[j] = x.eta[j] + (full ? xi[j] : 0.0);
    const double bias = full ? x.gamma[u] : 0.0;
    auto yxi = y.xi_of(u);
    std::fill(yxi.begin(), yxi.end(), 0.0);
    double yg = 0.0;
    for (std::size_t k = ds.user_begin(u); k < ds.user_end(u); ++k) {
      const double p = phi.diff_dot(left[k], right[k], coef.data()) + bias;
      phi.diff_axpy(p, left[k], right[k], yxi.data());
      yg += p;
    }
    for (std::size_t j = 0; j < dim; ++j) y.eta[j] += yxi[j];
    if (!full) {
      std::fill(yxi.begin(), yxi.end(), 0.0);
      yg = 0.0;
    }
    y.gamma[u] = yg;
  }
}

double dot(const ModelState& a, const ModelState& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.eta.size(); ++j) s += a.eta[j] * b.eta[j];
  for (std::size_t j = 0; j < a.xi.size(); ++j) s += a.xi[j] * b.xi[j];
  for (std::size_t j = 0; j < a.gamma.size(); ++j) s += a.gamma[j] * b.gamma[j];
  return s;
}

void scale(ModelState& a, double f) {
  for (double& v : a.eta) v *= f;
  for (double& v : a.xi) v *= f;
  for (double& v : a.gamma) v *= f;
}

}  // namespace

double spectral_norm(const ComparisonDataset& dataset, double tol,
                     std::uint64_t seed, GramPart part) {
  if (dataset.size() == 0) {
    throw Error(ErrorCode::kEmptyDataset, "no comparison records");
  }
  if (!(tol > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "spectral tolerance must be positive");
  }
  constexpr std::size_t kMaxIters = 10'000;
  const bool full = part == GramPart::kFull;

  ModelState x = ModelState::zeros(dataset.n_users(), dataset.dim());
  ModelState y = x;
  SplitMix64 rng(derive_seed(seed, {0x5eed}));
  std::normal_distribution<double> normal;
  for (double& v : x.eta) v = normal(rng);
  if (full) {
    for (double& v : x.xi) v = normal(rng);
    for (double& v : x.gamma) v = normal(rng);
  }
  scale(x, 1.0 / std::sqrt(dot(x, x)));

  // The Rayleigh quotient of power iterates increases monotonically to the
  // top eigenvalue; stopping on a change 100x below tol keeps the remaining
  // gap under tol unless the spectral gap is extremely small.
  std::vector<double> coef;
  double estimate = 0.0;
  for (std::size_t it = 0; it < kMaxIters; ++it) {
    apply_gram(dataset, part, x, y, coef);
    const double next = dot(x, y);
    const double norm = std::sqrt(dot(y, y));
    if (norm == 0.0) return 0.0;
    std::swap(x, y);
    scale(x, 1.0 / norm);
    if (it > 0 && std::abs(next - estimate) <= 0.01 * tol * next) return next;
    estimate = next;
  }
  throw Error(ErrorCode::kNoConvergence,
              "power iteration did not converge in 10000 steps; supply alpha "
              "explicitly");
}

StepPlan plan_steps(const ComparisonDataset& dataset,
                    const SolverConfig& config) {
  if (dataset.size() == 0) {
    throw Error(ErrorCode::kEmptyDataset, "no comparison records");
  }
  if (!(config.kappa > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "kappa must be positive");
  }
  if (config.alpha && !(*config.alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "alpha must be positive");
  }
  if (config.record_every == 0) {
    throw Error(ErrorCode::kInvalidConfig, "record_every must be at least 1");
  }
  if (config.threads == 0) {
    throw Error(ErrorCode::kInvalidConfig, "threads must be at least 1");
  }
  if (config.t_max && !(*config.t_max >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "t_max must be nonnegative");
  }
  require_outcomes(config.family, dataset);

  StepPlan plan;
  plan.mode = config.mode.value_or(default_penalty(dataset.features().mode()));
  plan.spectral_norm =
      spectral_norm(dataset, config.tol_spectral, config.seed, GramPart::kFull);
  const double m = static_cast<double>(dataset.size());
  plan.alpha = config.alpha.value_or(m / (config.kappa * plan.spectral_norm));
  const double ratio = plan.alpha * config.kappa * plan.spectral_norm / m;
  if (!(ratio < 2.0)) {
    throw Error(ErrorCode::kStepSizeTooLarge,
                "alpha * kappa * ||Gram||_2 / m = " + std::to_string(ratio) +
                    " must stay below 2 (alpha <= " +
                    std::to_string(2.0 * m / (config.kappa * plan.spectral_norm)) +
                    ")");
  }
  if (config.t_max) {
    auto k = static_cast<std::size_t>(std::ceil(*config.t_max / plan.alpha));
    while (static_cast<double>(k) * plan.alpha < *config.t_max) ++k;
    plan.iterations = k;
  } else {
    plan.iterations = config.max_iters;
  }
  return plan;
}

RegularizationPath fit_path(const ComparisonDataset& dataset,
                            const SolverConfig& config,
                            const IterationObserver& observer) {
  const StepPlan plan = plan_steps(dataset, config);
  RegularizationPath path;
  path.config = config;
  path.mode = plan.mode;
  path.alpha = plan.alpha;
  path.spectral_norm = plan.spectral_norm;
  path.iterations = plan.iterations;

  ModelState state = ModelState::zeros(dataset.n_users(), dataset.dim());
  detail::PathRecorder recorder(path, config.record_every);
  recorder.start(state);
  if (observer) observer(0, state);

  detail::LbiKernel kernel(dataset, config.family, plan.mode, config.kappa,
                           plan.alpha);
  std::vector<detail::SupportChange> changes(dataset.n_users());
  std::vector<double> coef;
  for (std::size_t k = 1; k <= plan.iterations; ++k) {
    for (std::size_t u = 0; u < dataset.n_users(); ++u) {
      changes[u] = kernel.user_step(state, u, coef);
    }
    kernel.eta_step(state, 0, state.dim);
    state.t = static_cast<double>(k) * plan.alpha;
    recorder.finish_iteration(k, state, changes);
    if (observer) observer(k, state);
  }
  return path;
}

ModelState fit_common_only(const ComparisonDataset& dataset, LossFamily family,
                           const BaselineOptions& options) {
  if (dataset.size() == 0) {
    throw Error(ErrorCode::kEmptyDataset, "no comparison records");
  }
  require_outcomes(family, dataset);
  const double lambda =
      spectral_norm(dataset, 1e-6, options.seed, GramPart::kCommonOnly);
  const double m = static_cast<double>(dataset.size());
  // Curvature bound of the per-record loss in the prediction.
  const double curvature = family == LossFamily::kBradleyTerry ? 0.25 : 1.0;
  const auto weights = dataset.weight();
  const double max_weight =
      std::max(1.0, *std::max_element(weights.begin(), weights.end()));
  const double step = m / (lambda * curvature * max_weight);

  ModelState state = ModelState::zeros(dataset.n_users(), dataset.dim());
  const FeatureMatrix& phi = dataset.features();
  const auto y = dataset.outcome();
  const auto left = dataset.left();
  const auto right = dataset.right();
  std::vector<double> grad(dataset.dim());
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t k = 0; k < dataset.size(); ++k) {
      const double pred = phi.diff_dot(left[k], right[k], state.eta.data());
      const double g = weights[k] * record_residual(family, y[k], pred) / m;
      phi.diff_axpy(g, left[k], right[k], grad.data());
    }
    double sq = 0.0;
    for (double v : grad) sq += v * v;
    if (std::sqrt(sq) <= options.gradient_tol) return state;
    for (std::size_t j = 0; j < grad.size(); ++j) state.eta[j] -= step * grad[j];
  }
  throw Error(ErrorCode::kNoConvergence,
              "common-only gradient descent did not reach gradient norm " +
                  std::to_string(options.gradient_tol));
}

Scores hodgerank_baseline(const ComparisonDataset& dataset, LossFamily family,
                          const BaselineOptions& options) {
  return compute_scores(fit_common_only(dataset, family, options),
                        dataset.features());
}

ModelState interpolate_state(const RegularizationPath& path, double kappa,
                             PenaltyMode mode, double t_query) {
  if (path.points.empty() || !(t_query >= 0.0) || t_query > path.t_max()) {
    throw Error(ErrorCode::kOutOfRange,
                "t = " + std::to_string(t_query) + " is outside the path [0, " +
                    std::to_string(path.t_max()) + "]");
  }
  const auto upper = std::upper_bound(
      path.points.begin(), path.points.end(), t_query,
      [](double t, const PathPoint& p) { return t < p.state.t; });
  const PathPoint& lo = *(upper - 1);
  if (lo.state.t == t_query || upper == path.points.end()) return lo.state;
  const PathPoint& hi = *upper;

  const double frac = (t_query - lo.state.t) / (hi.state.t - lo.state.t);
  auto lerp = [frac](const std::vector<double>& a, const std::vector<double>& b,
                     std::vector<double>& out) {
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + frac * (b[i] - a[i]);
  };
  ModelState out = lo.state;
  out.t = t_query;
  lerp(lo.state.eta, hi.state.eta, out.eta);
  lerp(lo.state.z_xi, hi.state.z_xi, out.z_xi);
  lerp(lo.state.z_gamma, hi.state.z_gamma, out.z_gamma);
  shrink_state(mode, kappa, out);
  return out;
}

ModelState interpolate_state(const RegularizationPath& path, double t_query) {
  return interpolate_state(path, path.config.kappa, path.mode, t_query);
}

}  // namespace mepath
