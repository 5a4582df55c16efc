#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "mepath/parallel.hpp"
#include "mepath/simulation.hpp"
#include "oracles.hpp"

using namespace mepath;

namespace {

ComparisonDataset small_sim() {
  SimConfig c;
  c.n_users = 12;
  c.n_min = 10;
  c.n_max = 40;
  c.seed = 3;
  return generate(c).dataset;
}

}  // namespace

TEST_CASE("shard plan covers users and eta exactly once") {
  const ComparisonDataset ds = small_sim();
  for (std::size_t threads : {1, 2, 3, 4, 8, 16}) {
    const ShardPlan plan = make_shard_plan(ds, threads);
    std::multiset<std::size_t> seen;
    for (const auto& shard : plan.user_shards) seen.insert(shard.begin(), shard.end());
    CHECK(seen.size() == ds.n_users());
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == ds.n_users());

    std::size_t next = 0, lo = ds.dim(), hi = 0;
    for (const IndexRange& r : plan.eta_shards) {
      CHECK(r.begin == next);
      next = r.end;
      lo = std::min(lo, r.end - r.begin);
      hi = std::max(hi, r.end - r.begin);
    }
    CHECK(next == ds.dim());
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("parallel path is bit-identical to the serial path") {
  const ComparisonDataset ds = small_sim();
  for (LossFamily f : {LossFamily::kBradleyTerry, LossFamily::kThurstoneMosteller}) {
    SolverConfig c;
    c.family = f;
    c.kappa = 5.0;
    c.max_iters = 300;
    c.record_every = 13;
    const RegularizationPath serial = fit_path(ds, c);
    for (std::size_t threads : {1, 2, 4, 8}) {
      c.threads = threads;
      SyncStats stats;
      const RegularizationPath par = fit_path_parallel(ds, c, {}, &stats);
      CHECK(par.alpha == serial.alpha);
      CHECK(par.points == serial.points);
      CHECK(par.events == serial.events);
      CHECK(stats.gradient_barriers == c.max_iters);
      CHECK(stats.eta_barriers == c.max_iters);
      CHECK(stats.ordering_violations == 0);
      CHECK(fit(ds, c).points == serial.points);
    }
  }
}

TEST_CASE("observer sees every iterate in order from every thread count") {
  std::mt19937_64 rng(2);
  oracle::SmallSpec spec;
  spec.n_users = 5;
  spec.records = 50;
  const ComparisonDataset ds = oracle::random_dataset(spec, rng);
  SolverConfig c;
  c.kappa = 2.0;
  c.max_iters = 40;
  c.threads = 3;
  std::vector<std::size_t> seen;
  fit_path_parallel(ds, c, [&](std::size_t k, const ModelState&) { seen.push_back(k); });
  REQUIRE(seen.size() == 41);
  for (std::size_t k = 0; k < seen.size(); ++k) CHECK(seen[k] == k);
}

TEST_CASE("repeated parallel runs agree") {
  const ComparisonDataset ds = small_sim();
  SolverConfig c;
  c.kappa = 5.0;
  c.max_iters = 200;
  c.threads = 4;
  const RegularizationPath a = fit_path_parallel(ds, c);
  for (int i = 0; i < 3; ++i) CHECK(fit_path_parallel(ds, c).points == a.points);
}

TEST_CASE("more threads than users") {
  std::mt19937_64 rng(4);
  oracle::SmallSpec spec;
  spec.n_users = 2;
  const ComparisonDataset ds = oracle::random_dataset(spec, rng);
  SolverConfig c;
  c.max_iters = 50;
  const RegularizationPath serial = fit_path(ds, c);
  c.threads = 8;
  CHECK(fit_path_parallel(ds, c).points == serial.points);
}
