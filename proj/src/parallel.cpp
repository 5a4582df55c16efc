#include "mepath/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cassert>
#include <exception>
#include <numeric>
#include <thread>

#include "lbi_kernel.hpp"
#include "mepath/error.hpp"

namespace mepath {

ShardPlan make_shard_plan(const ComparisonDataset& dataset,
                          std::size_t threads) {
  if (threads == 0) {
    throw Error(ErrorCode::kInvalidConfig, "threads must be at least 1");
  }
  ShardPlan plan;
  plan.user_shards.resize(threads);

  std::vector<std::size_t> order(dataset.n_users());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dataset.user_count(a) > dataset.user_count(b);
  });
  std::vector<std::size_t> load(threads, 0);
  for (std::size_t u : order) {
    const auto lightest = std::min_element(load.begin(), load.end());
    const auto shard = static_cast<std::size_t>(lightest - load.begin());
    plan.user_shards[shard].push_back(u);
    *lightest += dataset.user_count(u);
  }
  for (auto& shard : plan.user_shards) std::sort(shard.begin(), shard.end());

  const std::size_t dim = dataset.dim();
  const std::size_t base = dim / threads;
  const std::size_t extra = dim % threads;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < threads; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    plan.eta_shards.push_back({begin, begin + len});
    begin += len;
  }
  return plan;
}

RegularizationPath fit_path_parallel(const ComparisonDataset& dataset,
                                     const SolverConfig& config,
                                     const IterationObserver& observer,
                                     SyncStats* stats) {
  const StepPlan steps = plan_steps(dataset, config);
  const ShardPlan shards = make_shard_plan(dataset, config.threads);
  const std::size_t n_threads = shards.size();

  RegularizationPath path;
  path.config = config;
  path.mode = steps.mode;
  path.alpha = steps.alpha;
  path.spectral_norm = steps.spectral_norm;
  path.iterations = steps.iterations;

  ModelState state = ModelState::zeros(dataset.n_users(), dataset.dim());
  detail::PathRecorder recorder(path, config.record_every);
  recorder.start(state);
  if (observer) observer(0, state);
  if (steps.iterations == 0) return path;

  detail::LbiKernel kernel(dataset, config.family, steps.mode, config.kappa,
                           steps.alpha);
  std::vector<detail::SupportChange> changes(dataset.n_users());

#ifndef NDEBUG
  std::vector<std::size_t> owner(dataset.n_users());
  for (std::size_t i = 0; i < n_threads; ++i) {
    for (std::size_t u : shards.user_shards[i]) owner[u] = i;
  }
#endif

  SyncStats local_stats;
  std::atomic<std::size_t> eta_version{0};
  std::atomic<std::size_t> accumulated{0};
  std::atomic<std::size_t> violations{0};
  std::size_t iteration = 0;
  std::exception_ptr observer_error;

  auto after_gradients = [&]() noexcept { ++local_stats.gradient_barriers; };
  auto after_eta = [&]() noexcept {
    ++local_stats.eta_barriers;
    ++iteration;
    state.t = static_cast<double>(iteration) * steps.alpha;
    try {
      recorder.finish_iteration(iteration, state, changes);
      if (observer && !observer_error) observer(iteration, state);
    } catch (...) {
      if (!observer_error) observer_error = std::current_exception();
    }
    eta_version.fetch_add(1, std::memory_order_release);
  };
  std::barrier gradients_done(static_cast<std::ptrdiff_t>(n_threads),
                              after_gradients);
  std::barrier eta_done(static_cast<std::ptrdiff_t>(n_threads), after_eta);

  auto worker = [&](std::size_t shard) {
    std::vector<double> coef;
    const IndexRange eta_block = shards.eta_shards[shard];
    for (std::size_t k = 1; k <= steps.iterations; ++k) {
      // eta^{k-1} must be final before any prediction of iteration k.
      if (eta_version.load(std::memory_order_acquire) != k - 1) {
        violations.fetch_add(1, std::memory_order_relaxed);
      }
      for (std::size_t u : shards.user_shards[shard]) {
#ifndef NDEBUG
        assert(owner[u] == shard);
#endif
        changes[u] = kernel.user_step(state, u, coef);
      }
      accumulated.fetch_add(1, std::memory_order_acq_rel);
      gradients_done.arrive_and_wait();
      // Every shard's accumulators must be in before eta moves.
      if (accumulated.load(std::memory_order_acquire) != n_threads * k) {
        violations.fetch_add(1, std::memory_order_relaxed);
      }
      kernel.eta_step(state, eta_block.begin, eta_block.end);
      eta_done.arrive_and_wait();
    }
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads - 1);
    for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker, i);
    worker(0);
  }

  if (observer_error) std::rethrow_exception(observer_error);
  local_stats.ordering_violations = violations.load();
  if (stats) *stats = local_stats;
  return path;
}

RegularizationPath fit(const ComparisonDataset& dataset,
                       const SolverConfig& config,
                       const IterationObserver& observer) {
  if (config.threads <= 1) return fit_path(dataset, config, observer);
  return fit_path_parallel(dataset, config, observer);
}

}  // namespace mepath
