#include "mepath/losses.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mepath/error.hpp"

namespace mepath {

namespace {

constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;
// Below this argument the Gaussian CDF goes through the Mills ratio.
constexpr double kGaussianTail = -6.0;

double logistic_cdf(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

std::string_view loss_name(LossFamily family) {
  switch (family) {
    case LossFamily::kLinear: return "linear";
    case LossFamily::kBradleyTerry: return "bt";
    case LossFamily::kThurstoneMosteller: return "tm";
  }
  return "unknown";
}

LossFamily parse_loss(std::string_view name) {
  if (name == "linear") return LossFamily::kLinear;
  if (name == "bt") return LossFamily::kBradleyTerry;
  if (name == "tm") return LossFamily::kThurstoneMosteller;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown loss '" + std::string(name) + "' (linear, bt, tm)");
}

bool is_glm(LossFamily family) { return family != LossFamily::kLinear; }

void require_outcomes(LossFamily family, const ComparisonDataset& dataset) {
  if (!is_glm(family)) return;
  const auto y = dataset.outcome();
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (y[k] != 1.0 && y[k] != -1.0) {
      throw Error(ErrorCode::kNonBinaryOutcomeForGLM,
                  "record " + std::to_string(dataset.original_index()[k]) +
                      " has outcome " + std::to_string(y[k]) + " but loss '" +
                      std::string(loss_name(family)) + "' needs +1/-1");
    }
  }
}

namespace link {

double mills_ratio(double x) {
  if (x < 4.0) {
    // Direct ratio is accurate here; erfc does not underflow.
    const double tail = 0.5 * std::erfc(x / std::numbers::sqrt2);
    return tail / (kInvSqrt2Pi * std::exp(-0.5 * x * x));
  }
  // Continued fraction R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))), evaluated
  // with the modified Lentz method.
  constexpr double kTiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int n = 1; n < 500; ++n) {
    d = x + n * d;
    if (d == 0.0) d = kTiny;
    c = x + n / c;
    if (c == 0.0) c = kTiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / f;
}

double log_cdf(LossFamily family, double t) {
  switch (family) {
    case LossFamily::kBradleyTerry:
      if (t >= 0.0) return -std::log1p(std::exp(-t));
      return t - std::log1p(std::exp(t));
    case LossFamily::kThurstoneMosteller:
      if (t > 0.0) return std::log1p(-0.5 * std::erfc(t / std::numbers::sqrt2));
      if (t > kGaussianTail) return std::log(0.5 * std::erfc(-t / std::numbers::sqrt2));
      return -0.5 * t * t - kLogSqrt2Pi + std::log(mills_ratio(-t));
    case LossFamily::kLinear:
      break;
  }
  throw Error(ErrorCode::kInvalidConfig, "log_cdf needs a binary link");
}

double density(LossFamily family, double t) {
  switch (family) {
    case LossFamily::kBradleyTerry: {
      const double p = logistic_cdf(t);
      return p * (1.0 - p);
    }
    case LossFamily::kThurstoneMosteller:
      return kInvSqrt2Pi * std::exp(-0.5 * t * t);
    case LossFamily::kLinear:
      break;
  }
  throw Error(ErrorCode::kInvalidConfig, "density needs a binary link");
}

double hazard(LossFamily family, double t) {
  switch (family) {
    case LossFamily::kBradleyTerry:
      // psi / Psi = 1 - Psi(t) = Psi(-t) for the logistic link.
      return logistic_cdf(-t);
    case LossFamily::kThurstoneMosteller:
      if (t > kGaussianTail) {
        return density(family, t) / (0.5 * std::erfc(-t / std::numbers::sqrt2));
      }
      return 1.0 / mills_ratio(-t);
    case LossFamily::kLinear:
      break;
  }
  throw Error(ErrorCode::kInvalidConfig, "hazard needs a binary link");
}

}  // namespace link

double record_loss(LossFamily family, double y, double p) {
  if (family == LossFamily::kLinear) {
    const double r = y - p;
    return 0.5 * r * r;
  }
  return -link::log_cdf(family, y * p);
}

double loss_value(LossFamily family, const ComparisonDataset& dataset,
                  std::span<const double> pred) {
  if (pred.size() != dataset.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "prediction length does not match record count");
  }
  require_outcomes(family, dataset);
  const auto y = dataset.outcome();
  const auto w = dataset.weight();
  const auto original = dataset.original_index();
  double total = 0.0;
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    total += w[k] * record_loss(family, y[k], pred[original[k]]);
  }
  return total / static_cast<double>(dataset.size());
}

std::vector<double> gradient_residual(LossFamily family,
                                      const ComparisonDataset& dataset,
                                      std::span<const double> pred) {
  if (pred.size() != dataset.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "prediction length does not match record count");
  }
  require_outcomes(family, dataset);
  const auto y = dataset.outcome();
  const auto original = dataset.original_index();
  std::vector<double> g(dataset.size());
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    const std::size_t i = original[k];
    g[i] = record_residual(family, y[k], pred[i]);
  }
  return g;
}

double loss_at(LossFamily family, const ComparisonDataset& dataset,
               const ModelState& state) {
  return loss_value(family, dataset, predict_linear(state, dataset));
}

LossGradient loss_gradient(LossFamily family, const ComparisonDataset& dataset,
                           const ModelState& state) {
  require_outcomes(family, dataset);
  const std::vector<double> pred = predict_grouped(state, dataset);
  const FeatureMatrix& phi = dataset.features();
  const auto y = dataset.outcome();
  const auto w = dataset.weight();
  const auto left = dataset.left();
  const auto right = dataset.right();
  const double inv_m = 1.0 / static_cast<double>(dataset.size());

  LossGradient grad;
  grad.eta.assign(state.dim, 0.0);
  grad.xi.assign(state.n_users * state.dim, 0.0);
  grad.gamma.assign(state.n_users, 0.0);
  for (std::size_t u = 0; u < state.n_users; ++u) {
    double* xi_grad = grad.xi.data() + u * state.dim;
    for (std::size_t k = dataset.user_begin(u); k < dataset.user_end(u); ++k) {
      const double g = w[k] * record_residual(family, y[k], pred[k]) * inv_m;
      phi.diff_axpy(g, left[k], right[k], xi_grad);
      grad.gamma[u] += g;
    }
    for (std::size_t j = 0; j < state.dim; ++j) grad.eta[j] += xi_grad[j];
  }
  return grad;
}

}  // namespace mepath
