#pragma once

#include <cstddef>
#include <cstdint>

#include "mepath/dataset.hpp"
#include "mepath/losses.hpp"
#include "mepath/model.hpp"

namespace mepath {

// Synthetic mixed-effects preference data. Defaults reproduce the standard
// simulated study: 20 items with 10 Gaussian features, 100 users, sparse
// common/deviation coefficients, sparse position biases and 50..200
// Bradley-Terry comparisons per user.
struct SimConfig {
  std::size_t n_items = 20;
  std::size_t dim = 10;
  std::size_t n_users = 100;
  double p_common_nonzero = 0.4;
  double p_dev_nonzero = 0.4;
  double p_bias_nonzero = 0.4;
  double bias_sd = 2.0;
  std::size_t n_min = 50;
  std::size_t n_max = 200;
  LossFamily family = LossFamily::kBradleyTerry;
  std::uint64_t seed = 0;
};

struct Simulation {
  ComparisonDataset dataset;
  // Generating parameters; the dual blocks are left at zero.
  ModelState truth;
};

// Item i gets id "iNN", user u gets id "uNNN" (zero-padded so lexicographic
// order equals generation order). Binary families draw y = +1 with probability
// Psi(predictor); the linear family adds standard normal noise.
Simulation generate(const SimConfig& config);

void validate(const SimConfig& config);

}  // namespace mepath
