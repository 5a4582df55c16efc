#include "mepath/model.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "mepath/error.hpp"

namespace mepath {

ModelState ModelState::zeros(std::size_t n_users, std::size_t dim) {
  ModelState s;
  s.n_users = n_users;
  s.dim = dim;
  s.eta.assign(dim, 0.0);
  s.xi.assign(n_users * dim, 0.0);
  s.gamma.assign(n_users, 0.0);
  s.z_xi.assign(n_users * dim, 0.0);
  s.z_gamma.assign(n_users, 0.0);
  return s;
}

bool ModelState::deviation_nonzero(std::size_t u) const {
  const auto row = xi_of(u);
  return std::any_of(row.begin(), row.end(), [](double v) { return v != 0.0; });
}

void ModelState::check_compatible(const ComparisonDataset& dataset) const {
  const bool ok = dim == dataset.dim() && n_users == dataset.n_users() &&
                  eta.size() == dim && xi.size() == n_users * dim &&
                  gamma.size() == n_users && z_xi.size() == n_users * dim &&
                  z_gamma.size() == n_users;
  if (!ok) {
    throw Error(ErrorCode::kDimensionMismatch,
                "state (users=" + std::to_string(n_users) +
                    ", dim=" + std::to_string(dim) +
                    ") does not match dataset (users=" +
                    std::to_string(dataset.n_users()) +
                    ", dim=" + std::to_string(dataset.dim()) + ")");
  }
}

std::vector<double> predict_grouped(const ModelState& state,
                                    const ComparisonDataset& dataset) {
  state.check_compatible(dataset);
  const FeatureMatrix& phi = dataset.features();
  const auto left = dataset.left();
  const auto right = dataset.right();
  std::vector<double> pred(dataset.size());
  std::vector<double> coef(state.dim);
  for (std::size_t u = 0; u < state.n_users; ++u) {
    const auto xi = state.xi_of(u);
    for (std::size_t j = 0; j < state.dim; ++j) coef[j] = state.eta[j] + xi[j];
    const double bias = state.gamma[u];
    for (std::size_t k = dataset.user_begin(u); k < dataset.user_end(u); ++k) {
      pred[k] = phi.diff_dot(left[k], right[k], coef.data()) + bias;
    }
  }
  return pred;
}

std::vector<double> predict_linear(const ModelState& state,
                                   const ComparisonDataset& dataset) {
  const std::vector<double> grouped = predict_grouped(state, dataset);
  const auto original = dataset.original_index();
  std::vector<double> out(grouped.size());
  for (std::size_t k = 0; k < grouped.size(); ++k) out[original[k]] = grouped[k];
  return out;
}

Scores compute_scores(const ModelState& state, const FeatureMatrix& features) {
  if (features.cols() != state.dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "state dimension does not match features");
  }
  Scores scores;
  scores.common = features.apply(state.eta);
  double shift = 0.0;
  if (features.is_identity() && !scores.common.empty()) {
    shift = std::accumulate(scores.common.begin(), scores.common.end(), 0.0) /
            static_cast<double>(scores.common.size());
    for (double& v : scores.common) v -= shift;
  }
  scores.personalized.reserve(state.n_users);
  for (std::size_t u = 0; u < state.n_users; ++u) {
    const auto xi = state.xi_of(u);
    std::vector<double> deviation = features.apply(xi);
    std::vector<double> row(scores.common.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
      row[i] = scores.common[i] + deviation[i];
    }
    scores.personalized.push_back(std::move(row));
  }
  return scores;
}

}  // namespace mepath
