#include <doctest.h>

#include <cmath>
#include <random>

#include "mepath/error.hpp"
#include "mepath/penalty.hpp"
#include "oracles.hpp"

using namespace mepath;

namespace {

std::vector<double> shrunk(PenaltyMode mode, double kappa, const std::vector<double>& z) {
  std::vector<double> out(z.size());
  shrink_block(mode, kappa, z, out);
  return out;
}

}  // namespace

TEST_CASE("penalty values") {
  CHECK(penalty_value(PenaltyMode::kGroupSparse, std::vector<double>(4, 0.0), 2,
                      std::vector<double>(2, 0.0)) == 0.0);
  const std::vector<double> xi = {3.0, 4.0};
  const std::vector<double> gamma = {-2.0};
  CHECK(penalty_value(PenaltyMode::kGroupSparse, xi, 2, gamma) == 7.0);
  CHECK(penalty_value(PenaltyMode::kEntrywiseSparse, xi, 2, gamma) == 9.0);
  CHECK_THROWS_AS(penalty_value(PenaltyMode::kGroupSparse, xi, 3, gamma), Error);
}

TEST_CASE("penalty names and defaults") {
  CHECK(parse_penalty("group") == PenaltyMode::kGroupSparse);
  CHECK(parse_penalty("entrywise") == PenaltyMode::kEntrywiseSparse);
  CHECK_THROWS_AS(parse_penalty("ridge"), Error);
  CHECK(default_penalty(FeatureMode::kIdentity) == PenaltyMode::kGroupSparse);
  CHECK(default_penalty(FeatureMode::kExplicit) == PenaltyMode::kEntrywiseSparse);
}

TEST_CASE("group shrink examples") {
  const auto inside = shrunk(PenaltyMode::kGroupSparse, 7.0, {0.9, 0.0});
  CHECK(inside == std::vector<double>{0.0, 0.0});
  const auto axis = shrunk(PenaltyMode::kGroupSparse, 5.0, {0.0, 2.0});
  CHECK(axis[0] == 0.0);
  CHECK(axis[1] == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(shrink_scalar(3.0, 0.5) == 0.0);
  CHECK(shrink_scalar(3.0, -2.0) == -3.0);
}

TEST_CASE("shrink equals kappa times a brute-force prox") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> kappa_pick(0.1, 10.0);
  std::uniform_int_distribution<int> dim_pick(1, 3);
  std::normal_distribution<double> normal(0.0, 1.5);
  for (PenaltyMode mode : {PenaltyMode::kGroupSparse, PenaltyMode::kEntrywiseSparse}) {
    for (int i = 0; i < 100; ++i) {
      std::vector<double> z(dim_pick(rng));
      for (double& v : z) v = normal(rng);
      const double kappa = kappa_pick(rng);
      const auto w = oracle::prox_search(mode == PenaltyMode::kGroupSparse, z);
      const auto got = shrunk(mode, kappa, z);
      for (std::size_t j = 0; j < z.size(); ++j) {
        CHECK(std::abs(got[j] - kappa * w[j]) < 1e-6);
      }
    }
  }
}

TEST_CASE("shrink properties") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal(0.0, 1.2);
  for (PenaltyMode mode : {PenaltyMode::kGroupSparse, PenaltyMode::kEntrywiseSparse}) {
    for (int i = 0; i < 300; ++i) {
      std::vector<double> z(3), z2(3);
      for (double& v : z) v = normal(rng);
      for (double& v : z2) v = normal(rng);
      const double kappa = 0.5 + std::abs(normal(rng));
      const auto out = shrunk(mode, kappa, z);

      // Support is exactly the outside of the unit ball / interval.
      double norm = 0.0;
      for (double v : z) norm += v * v;
      norm = std::sqrt(norm);
      if (mode == PenaltyMode::kGroupSparse) {
        const bool nonzero = out[0] != 0.0 || out[1] != 0.0 || out[2] != 0.0;
        CHECK(nonzero == (norm > 1.0));
        if (nonzero) {
          // Positive multiple of z.
          const double c = out[0] / z[0];
          CHECK(c > 0.0);
          for (std::size_t j = 0; j < 3; ++j) CHECK(out[j] == doctest::Approx(c * z[j]));
        }
      } else {
        for (std::size_t j = 0; j < 3; ++j) CHECK((out[j] != 0.0) == (std::abs(z[j]) > 1.0));
      }

      // Positive homogeneity in kappa.
      const auto doubled = shrunk(mode, 2.5 * kappa, z);
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(doubled[j] == doctest::Approx(2.5 * out[j]).epsilon(1e-14));
      }

      // shrink / kappa is nonexpansive.
      const auto out2 = shrunk(mode, kappa, z2);
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t j = 0; j < 3; ++j) {
        lhs += std::pow((out[j] - out2[j]) / kappa, 2);
        rhs += std::pow(z[j] - z2[j], 2);
      }
      CHECK(std::sqrt(lhs) <= std::sqrt(rhs) + 1e-12);
    }
  }
}

TEST_CASE("shrink_state maps every block") {
  ModelState s = ModelState::zeros(2, 2);
  s.z_xi = {0.0, 2.0, 0.5, 0.5};
  s.z_gamma = {-3.0, 0.2};
  shrink_state(PenaltyMode::kGroupSparse, 5.0, s);
  CHECK(s.xi == std::vector<double>{0.0, 5.0, 0.0, 0.0});
  CHECK(s.gamma == std::vector<double>{-10.0, 0.0});
}
