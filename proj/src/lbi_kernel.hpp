#pragma once

// Iteration kernel shared by the serial and the synchronized parallel solver.
// Both drive the same two phases, so their arithmetic is identical:
//
//   phase 1, per user u (independent across users):
//     pred_k   = (phi_l - phi_r)^T (eta + xi_u) + gamma_u      for k in u
//     g_k      = w_k * residual(y_k, pred_k)
//     a_u      = sum_k g_k (phi_l - phi_r),   c_u = sum_k g_k
//     z_xi_u  -= alpha/m * a_u,               z_gamma_u -= alpha/m * c_u
//     (xi_u, gamma_u) = kappa * shrink(z_u)
//   phase 2, per coordinate j of eta:
//     eta_j   -= alpha*kappa/m * sum_u a_u[j]     (users summed in index order)
//
// Phase 2 sums the per-user accumulators in a fixed order, so the result does
// not depend on how users are sharded across threads.

#include <cstdint>
#include <vector>

#include "mepath/dataset.hpp"
#include "mepath/lbi.hpp"
#include "mepath/model.hpp"
#include "mepath/penalty.hpp"

namespace mepath::detail {

// Support transition of one block in one iteration: -1 left, 0 none, +1 entered.
struct SupportChange {
  std::int8_t deviation = 0;
  std::int8_t bias = 0;
};

class LbiKernel {
 public:
  LbiKernel(const ComparisonDataset& dataset, LossFamily family,
            PenaltyMode mode, double kappa, double alpha);

  SupportChange user_step(ModelState& state, std::size_t u,
                          std::vector<double>& coef_scratch);
  void eta_step(ModelState& state, std::size_t j_begin,
                std::size_t j_end) const;

 private:
  const ComparisonDataset& dataset_;
  LossFamily family_;
  PenaltyMode mode_;
  double kappa_;
  double z_step_;
  double eta_step_;
  std::vector<double> accum_;  // n_users * dim
};

// Appends events for the iteration and decides whether it gets a snapshot.
class PathRecorder {
 public:
  PathRecorder(RegularizationPath& path, std::size_t record_every);

  void start(const ModelState& zero_state);
  void finish_iteration(std::size_t iteration, const ModelState& state,
                        const std::vector<SupportChange>& changes);

 private:
  RegularizationPath& path_;
  std::size_t record_every_;
};

}  // namespace mepath::detail
