#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mepath/dataset.hpp"

namespace mepath {

// Parameters at one point of the path: the common coefficient eta, the
// per-user deviations xi and position biases gamma, and the dual variables
// z_xi / z_gamma that the shrinkage maps onto (xi, gamma). Per-user vectors
// are stored row-major, user u occupying [u * dim, (u + 1) * dim).
struct ModelState {
  std::size_t n_users = 0;
  std::size_t dim = 0;
  double t = 0.0;
  std::vector<double> eta;
  std::vector<double> xi;
  std::vector<double> gamma;
  std::vector<double> z_xi;
  std::vector<double> z_gamma;

  static ModelState zeros(std::size_t n_users, std::size_t dim);

  std::span<double> xi_of(std::size_t u) { return {xi.data() + u * dim, dim}; }
  std::span<const double> xi_of(std::size_t u) const {
    return {xi.data() + u * dim, dim};
  }
  std::span<double> z_xi_of(std::size_t u) {
    return {z_xi.data() + u * dim, dim};
  }
  std::span<const double> z_xi_of(std::size_t u) const {
    return {z_xi.data() + u * dim, dim};
  }

  bool deviation_nonzero(std::size_t u) const;

  // Throws DimensionMismatch unless the state fits the dataset.
  void check_compatible(const ComparisonDataset& dataset) const;

  friend bool operator==(const ModelState&, const ModelState&) = default;
};

struct Scores {
  std::vector<double> common;                     // Phi * eta
  std::vector<std::vector<double>> personalized;  // Phi * (eta + xi_u)
};

// Linear predictor per record, in input order:
// (phi_left - phi_right)^T (eta + xi_u) + gamma_u.
std::vector<double> predict_linear(const ModelState& state,
                                   const ComparisonDataset& dataset);

// Same predictor in the dataset's grouped order; the solvers work in this
// order.
std::vector<double> predict_grouped(const ModelState& state,
                                    const ComparisonDataset& dataset);

// Item scores. In identity mode the common scores are shifted to zero mean
// over items (eta is only identified up to a constant there) and every
// personalized row receives the same shift, so personalized - common stays
// exactly Phi * xi_u.
Scores compute_scores(const ModelState& state, const FeatureMatrix& features);

}  // namespace mepath
