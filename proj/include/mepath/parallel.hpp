#pragma once

#include <cstddef>
#include <vector>

#include "mepath/dataset.hpp"
#include "mepath/lbi.hpp"

namespace mepath {

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Work split for the synchronized parallel solver. Users are spread over the
// shards by greedy bin packing on record counts (largest users first, each to
// the currently lightest shard); eta coordinates are split into contiguous
// blocks whose sizes differ by at most one.
struct ShardPlan {
  std::vector<std::vector<std::size_t>> user_shards;
  std::vector<IndexRange> eta_shards;

  std::size_t size() const { return user_shards.size(); }
};

ShardPlan make_shard_plan(const ComparisonDataset& dataset,
                          std::size_t threads);

// Barrier bookkeeping from a parallel run. A correct run has one completion of
// each barrier per iteration and no ordering violations.
struct SyncStats {
  std::size_t gradient_barriers = 0;
  std::size_t eta_barriers = 0;
  std::size_t ordering_violations = 0;
};

// Synchronized parallel Linearized Bregman path on config.threads threads.
// Each iteration runs the per-user phase on every shard, synchronizes, updates
// the eta blocks in parallel and synchronizes again. The eta reduction sums
// per-user accumulators in user order, so the path is bit-identical to
// fit_path for every thread count.
RegularizationPath fit_path_parallel(const ComparisonDataset& dataset,
                                     const SolverConfig& config,
                                     const IterationObserver& observer = {},
                                     SyncStats* stats = nullptr);

// fit_path for threads == 1, fit_path_parallel otherwise.
RegularizationPath fit(const ComparisonDataset& dataset,
                       const SolverConfig& config,
                       const IterationObserver& observer = {});

}  // namespace mepath
