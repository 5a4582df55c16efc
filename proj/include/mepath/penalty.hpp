#pragma once

#include <span>
#include <string_view>

#include "mepath/model.hpp"

namespace mepath {

// GroupSparse: |gamma|_1 + sum_u ||xi_u||_2 (whole deviation vectors enter or
// leave together). EntrywiseSparse: |gamma|_1 + sum_u ||xi_u||_1.
enum class PenaltyMode { kGroupSparse, kEntrywiseSparse };

std::string_view penalty_name(PenaltyMode mode);  // "group", "entrywise"
PenaltyMode parse_penalty(std::string_view name);

// Group for identity features, entrywise otherwise.
PenaltyMode default_penalty(FeatureMode features);

double penalty_value(PenaltyMode mode, std::span<const double> xi,
                     std::size_t dim, std::span<const double> gamma);

// kappa * max(0, 1 - 1/|z|) * z for a scalar dual value.
inline double shrink_scalar(double kappa, double z) {
  if (z > 1.0) return kappa * (z - 1.0);
  if (z < -1.0) return kappa * (z + 1.0);
  return 0.0;
}

// Maps one user's dual block onto its deviation block. Group mode applies
// kappa * max(0, 1 - 1/||z||_2) * z; entrywise mode applies shrink_scalar per
// coordinate.
void shrink_block(PenaltyMode mode, double kappa, std::span<const double> z,
                  std::span<double> out);

// Recomputes state.xi and state.gamma from state.z_xi and state.z_gamma.
void shrink_state(PenaltyMode mode, double kappa, ModelState& state);

}  // namespace mepath
