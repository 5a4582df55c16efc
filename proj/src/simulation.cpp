#include "mepath/simulation.hpp"

#include <cmath>
#include <random>
#include <string>

#include "mepath/error.hpp"
#include "mepath/random.hpp"

namespace mepath {

namespace {

std::string padded_id(char prefix, std::size_t index, std::size_t count) {
  const std::size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
  std::string digits = std::to_string(index);
  return prefix + std::string(width - digits.size(), '0') + digits;
}

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

double sample_outcome(LossFamily family, double predictor, SplitMix64& rng) {
  if (family == LossFamily::kLinear) {
    std::normal_distribution<double> noise;
    return predictor + noise(rng);
  }
  const double p_left = std::exp(link::log_cdf(family, predictor));
  return uniform01(rng) < p_left ? 1.0 : -1.0;
}

}  // namespace

void validate(const SimConfig& config) {
  if (config.n_items < 2) {
    throw Error(ErrorCode::kInvalidConfig, "need at least two items");
  }
  if (config.dim == 0 || config.n_users == 0) {
    throw Error(ErrorCode::kInvalidConfig, "dim and n_users must be positive");
  }
  if (!probability(config.p_common_nonzero) ||
      !probability(config.p_dev_nonzero) || !probability(config.p_bias_nonzero)) {
    throw Error(ErrorCode::kInvalidConfig, "probabilities must lie in [0, 1]");
  }
  if (!(config.bias_sd > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "bias_sd must be positive");
  }
  if (config.n_min > config.n_max || config.n_max == 0) {
    throw Error(ErrorCode::kInvalidConfig, "need 0 < n_min <= n_max");
  }
}

Simulation generate(const SimConfig& config) {
  validate(config);
  const std::size_t n = config.n_items;
  const std::size_t dim = config.dim;
  std::normal_distribution<double> normal;

  SplitMix64 global(derive_seed(config.seed, {0}));
  std::vector<double> phi(n * dim);
  for (double& v : phi) v = normal(global);
  FeatureMatrix features = FeatureMatrix::dense(n, dim, std::move(phi));

  ModelState truth = ModelState::zeros(config.n_users, dim);
  for (double& v : truth.eta) {
    const bool nonzero = uniform01(global) < config.p_common_nonzero;
    const double draw = normal(global);
    v = nonzero ? draw : 0.0;
  }

  std::vector<std::string> item_ids;
  for (std::size_t i = 0; i < n; ++i) item_ids.push_back(padded_id('i', i, n));

  std::vector<ComparisonRecord> records;
  std::vector<double> coef(dim);
  for (std::size_t u = 0; u < config.n_users; ++u) {
    SplitMix64 user_rng(derive_seed(config.seed, {1, u}));
    auto xi = truth.xi_of(u);
    for (double& v : xi) {
      const bool nonzero = uniform01(user_rng) < config.p_dev_nonzero;
      const double draw = normal(user_rng);
      v = nonzero ? draw : 0.0;
    }
    {
      const bool nonzero = uniform01(user_rng) < config.p_bias_nonzero;
      const double draw = config.bias_sd * normal(user_rng);
      truth.gamma[u] = nonzero ? draw : 0.0;
    }
    std::uniform_int_distribution<std::size_t> count_dist(config.n_min,
                                                          config.n_max);
    const std::size_t count = count_dist(user_rng);

    for (std::size_t j = 0; j < dim; ++j) coef[j] = truth.eta[j] + xi[j];
    const std::string user_id = padded_id('u', u, config.n_users);
    for (std::size_t s = 0; s < count; ++s) {
      SplitMix64 rng(derive_seed(config.seed, {2, u, s}));
      std::uniform_int_distribution<std::size_t> first(0, n - 1);
      std::uniform_int_distribution<std::size_t> second(0, n - 2);
      const std::size_t left = first(rng);
      std::size_t right = second(rng);
      if (right >= left) ++right;
      const double predictor =
          features.diff_dot(left, right, coef.data()) + truth.gamma[u];
      records.push_back(
          {user_id, left, right, sample_outcome(config.family, predictor, rng), 1.0});
    }
  }

  Simulation sim;
  sim.dataset = build_dataset(records, std::move(features), std::move(item_ids));
  sim.truth = std::move(truth);
  return sim;
}

}  // namespace mepath
