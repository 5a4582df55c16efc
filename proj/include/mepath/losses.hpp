#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "mepath/dataset.hpp"
#include "mepath/model.hpp"

namespace mepath {

enum class LossFamily { kLinear, kBradleyTerry, kThurstoneMosteller };

std::string_view loss_name(LossFamily family);  // "linear", "bt", "tm"
LossFamily parse_loss(std::string_view name);

bool is_glm(LossFamily family);

// Throws NonBinaryOutcomeForGLM if the family needs +/-1 outcomes and the
// dataset has anything else.
void require_outcomes(LossFamily family, const ComparisonDataset& dataset);

// Link-function primitives for the binary models. Psi is the CDF, psi its
// density, and the hazard is psi / Psi. All three stay finite and accurate for
// arguments far into either tail.
namespace link {

double log_cdf(LossFamily family, double t);
double density(LossFamily family, double t);
double hazard(LossFamily family, double t);

// Mills ratio R(x) = (1 - Phi(x)) / phi(x) for the standard normal, x >= 0.
double mills_ratio(double x);

}  // namespace link

// Per-record loss term before the 1/m factor, for prediction p and outcome y.
double record_loss(LossFamily family, double y, double p);

// Per-record residual g with dL/dp = g / m. Linear: p - y;
// GLM: -y * hazard(y * p).
inline double record_residual(LossFamily family, double y, double p) {
  if (family == LossFamily::kLinear) return p - y;
  return -y * link::hazard(family, y * p);
}

// Linear: (1/2m) sum w (y - p)^2.  GLM: -(1/m) sum w log Psi(y p).
// `pred` is in the dataset's input order.
double loss_value(LossFamily family, const ComparisonDataset& dataset,
                  std::span<const double> pred);

// Residuals g (input order, unweighted) such that the gradient of the loss
// with respect to the parameters is (1/m) X^T (w .* g).
std::vector<double> gradient_residual(LossFamily family,
                                      const ComparisonDataset& dataset,
                                      std::span<const double> pred);

// Loss and its full parameter gradient at a state.
struct LossGradient {
  std::vector<double> eta;
  std::vector<double> xi;     // row-major per user
  std::vector<double> gamma;
};

double loss_at(LossFamily family, const ComparisonDataset& dataset,
               const ModelState& state);
LossGradient loss_gradient(LossFamily family, const ComparisonDataset& dataset,
                           const ModelState& state);

}  // namespace mepath
