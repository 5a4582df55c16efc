#include <doctest.h>

#include <algorithm>
#include <random>

#include "mepath/dataset.hpp"
#include "mepath/error.hpp"
#include "mepath/model.hpp"
#include "mepath/simulation.hpp"
#include "oracles.hpp"

using namespace mepath;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kIoError;
}

}  // namespace

TEST_CASE("minimal dataset has one record, one user, two items") {
  const std::vector<ComparisonRecord> recs = {{"a", 0, 1, 1.0}};
  const ComparisonDataset ds = build_dataset(recs, FeatureMatrix::identity(2));
  CHECK(ds.size() == 1);
  CHECK(ds.n_users() == 1);
  CHECK(ds.n_items() == 2);
  CHECK(ds.dim() == 2);
  CHECK(ds.weight()[0] == 1.0);
}

TEST_CASE("build_dataset rejects bad input") {
  const std::vector<ComparisonRecord> none;
  CHECK(code_of([&] { build_dataset(none, FeatureMatrix::identity(2)); }) ==
        ErrorCode::kEmptyDataset);
  const std::vector<ComparisonRecord> far = {{"a", 0, 5, 1.0}};
  CHECK(code_of([&] { build_dataset(far, FeatureMatrix::identity(3)); }) ==
        ErrorCode::kItemIndexOutOfRange);
  const std::vector<ComparisonRecord> self = {{"a", 1, 1, 1.0}};
  CHECK(code_of([&] { build_dataset(self, FeatureMatrix::identity(3)); }) ==
        ErrorCode::kInvalidConfig);
  const std::vector<ComparisonRecord> negative = {{"a", 0, 1, 1.0, -1.0}};
  CHECK(code_of([&] { build_dataset(negative, FeatureMatrix::identity(3)); }) ==
        ErrorCode::kInvalidConfig);
}

TEST_CASE("non-binary outcomes are accepted at build time") {
  const std::vector<ComparisonRecord> recs = {{"a", 0, 1, 0.3}, {"b", 1, 0, -2.0}};
  const ComparisonDataset ds = build_dataset(recs, FeatureMatrix::identity(2));
  CHECK_FALSE(ds.is_binary());
}

TEST_CASE("users are reindexed in lexicographic order and records grouped") {
  const std::vector<ComparisonRecord> recs = {
      {"zed", 0, 1, 1.0}, {"amy", 1, 2, -1.0}, {"zed", 2, 0, 1.0}, {"bob", 0, 2, 1.0}};
  const ComparisonDataset ds = build_dataset(recs, FeatureMatrix::identity(3));
  CHECK(ds.user_ids() == std::vector<std::string>{"amy", "bob", "zed"});
  CHECK(ds.user_count(2) == 2);
  CHECK(ds.user_begin(0) == 0);
  CHECK(ds.original_index()[ds.user_begin(2)] == 0);
  CHECK(ds.original_index()[ds.user_begin(2) + 1] == 2);
  const auto back = ds.records();
  for (std::size_t k = 0; k < recs.size(); ++k) {
    CHECK(back[k].user == recs[k].user);
    CHECK(back[k].left == recs[k].left);
    CHECK(back[k].right == recs[k].right);
    CHECK(back[k].outcome == recs[k].outcome);
  }
}

TEST_CASE("simulated study has the expected shape") {
  const Simulation sim = generate(SimConfig{});
  CHECK(sim.dataset.n_users() == 100);
  CHECK(sim.dataset.n_items() == 20);
  std::size_t total = 0;
  for (std::size_t u = 0; u < sim.dataset.n_users(); ++u) {
    CHECK(sim.dataset.user_count(u) >= 50);
    CHECK(sim.dataset.user_count(u) <= 200);
    total += sim.dataset.user_count(u);
  }
  CHECK(total == sim.dataset.size());
}

TEST_CASE("items_connected detects components") {
  const std::vector<ComparisonRecord> split = {{"a", 0, 1, 1.0}, {"a", 2, 3, 1.0}};
  CHECK_FALSE(build_dataset(split, FeatureMatrix::identity(4)).items_connected());
  const std::vector<ComparisonRecord> joined = {
      {"a", 0, 1, 1.0}, {"a", 2, 3, 1.0}, {"b", 1, 2, -1.0}};
  CHECK(build_dataset(joined, FeatureMatrix::identity(4)).items_connected());
}

TEST_CASE("subset keeps id spaces") {
  const std::vector<ComparisonRecord> recs = {
      {"a", 0, 1, 1.0}, {"b", 1, 2, -1.0}, {"c", 2, 0, 1.0}};
  const ComparisonDataset ds = build_dataset(recs, FeatureMatrix::identity(3));
  const std::vector<std::size_t> pick = {2};
  const ComparisonDataset sub = ds.subset(pick);
  CHECK(sub.size() == 1);
  CHECK(sub.n_users() == 3);
  CHECK(sub.user_count(2) == 1);
  CHECK(sub.user_count(0) == 0);
  CHECK(sub.records()[0].user == "c");
}

TEST_CASE("predict_linear basics") {
  const std::vector<ComparisonRecord> recs = {{"a", 0, 1, 1.0}};
  const ComparisonDataset ds = build_dataset(recs, FeatureMatrix::identity(2));
  ModelState s = ModelState::zeros(1, 2);
  CHECK(predict_linear(s, ds) == std::vector<double>{0.0});
  s.eta = {1.0, 0.0};
  CHECK(predict_linear(s, ds) == std::vector<double>{1.0});

  const ModelState wrong = ModelState::zeros(2, 2);
  CHECK(code_of([&] { predict_linear(wrong, ds); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("predict_linear matches a per-record oracle") {
  std::mt19937_64 rng(11);
  for (std::size_t dim : {0, 3}) {
    oracle::SmallSpec spec;
    spec.dim = dim;
    spec.n_items = 5;
    spec.records = 40;
    const ComparisonDataset ds = oracle::random_dataset(spec, rng);
    const ModelState s = oracle::random_state(ds, 1.0, rng);
    const auto got = predict_linear(s, ds);
    const auto want = oracle::predictions(s, ds);
    CHECK(oracle::max_abs_diff(got, want) < 1e-12);
  }
}

TEST_CASE("predictor skew-symmetry under swapped presentation") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::vector<double> data(4 * 2);
  for (double& v : data) v = normal(rng);
  const FeatureMatrix phi = FeatureMatrix::dense(4, 2, data);
  const std::vector<ComparisonRecord> fwd = {{"a", 0, 3, 1.0}};
  const std::vector<ComparisonRecord> rev = {{"a", 3, 0, -1.0}};
  const ComparisonDataset a = build_dataset(fwd, phi);
  const ComparisonDataset b = build_dataset(rev, phi);
  ModelState s = ModelState::zeros(1, 2);
  s.eta = {0.7, -1.2};
  s.xi = {0.3, 0.1};
  CHECK(predict_linear(s, a)[0] == doctest::Approx(-predict_linear(s, b)[0]).epsilon(1e-15));
  s.gamma = {0.4};
  // With a bias only the score difference flips.
  CHECK(predict_linear(s, a)[0] - 0.4 ==
        doctest::Approx(-(predict_linear(s, b)[0] - 0.4)).epsilon(1e-14));
}

TEST_CASE("scores identity: personalized minus common is Phi xi") {
  std::mt19937_64 rng(3);
  for (std::size_t dim : {0, 4}) {
    oracle::SmallSpec spec;
    spec.dim = dim;
    spec.n_items = 6;
    const ComparisonDataset ds = oracle::random_dataset(spec, rng);
    const ModelState s = oracle::random_state(ds, 1.0, rng);
    const Scores sc = compute_scores(s, ds.features());
    for (std::size_t u = 0; u < s.n_users; ++u) {
      const auto dev = ds.features().apply(s.xi_of(u));
      for (std::size_t i = 0; i < ds.n_items(); ++i) {
        CHECK(std::abs(sc.personalized[u][i] - sc.common[i] - dev[i]) < 1e-12);
      }
    }
    if (dim == 0) {
      double mean = 0.0;
      for (double v : sc.common) mean += v;
      CHECK(std::abs(mean) < 1e-12);
    }
  }
}
