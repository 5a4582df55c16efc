#include "mepath/penalty.hpp"

#include <cmath>
#include <string>

#include "mepath/error.hpp"

namespace mepath {

std::string_view penalty_name(PenaltyMode mode) {
  return mode == PenaltyMode::kGroupSparse ? "group" : "entrywise";
}

PenaltyMode parse_penalty(std::string_view name) {
  if (name == "group") return PenaltyMode::kGroupSparse;
  if (name == "entrywise") return PenaltyMode::kEntrywiseSparse;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown penalty '" + std::string(name) + "' (group, entrywise)");
}

PenaltyMode default_penalty(FeatureMode features) {
  return features == FeatureMode::kIdentity ? PenaltyMode::kGroupSparse
                                            : PenaltyMode::kEntrywiseSparse;
}

double penalty_value(PenaltyMode mode, std::span<const double> xi,
                     std::size_t dim, std::span<const double> gamma) {
  if (dim == 0 ? !xi.empty() : xi.size() != gamma.size() * dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "deviation block size does not match user count");
  }
  double total = 0.0;
  for (double g : gamma) total += std::abs(g);
  for (std::size_t u = 0; u < gamma.size(); ++u) {
    const auto block = xi.subspan(u * dim, dim);
    if (mode == PenaltyMode::kGroupSparse) {
      double sq = 0.0;
      for (double v : block) sq += v * v;
      total += std::sqrt(sq);
    } else {
      for (double v : block) total += std::abs(v);
    }
  }
  return total;
}

void shrink_block(PenaltyMode mode, double kappa, std::span<const double> z,
                  std::span<double> out) {
  if (mode == PenaltyMode::kEntrywiseSparse) {
    for (std::size_t j = 0; j < z.size(); ++j) out[j] = shrink_scalar(kappa, z[j]);
    return;
  }
  double sq = 0.0;
  for (double v : z) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm <= 1.0) {
    for (double& v : out) v = 0.0;
    return;
  }
  const double factor = kappa * (1.0 - 1.0 / norm);
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = factor * z[j];
}

void shrink_state(PenaltyMode mode, double kappa, ModelState& state) {
  for (std::size_t u = 0; u < state.n_users; ++u) {
    shrink_block(mode, kappa, state.z_xi_of(u), state.xi_of(u));
    state.gamma[u] = shrink_scalar(kappa, state.z_gamma[u]);
  }
}

}  // namespace mepath
