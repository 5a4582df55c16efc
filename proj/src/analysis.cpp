#include "mepath/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mepath/error.hpp"

namespace mepath {

std::vector<std::optional<double>> first_entry_times(
    const RegularizationPath& path, BlockKind block) {
  const std::size_t n_users =
      path.points.empty() ? 0 : path.points.front().state.n_users;
  std::vector<std::optional<double>> first(n_users);
  for (const SupportEvent& e : path.events) {
    if (e.block != block || !e.entered || e.user >= n_users) continue;
    if (!first[e.user] || e.t < *first[e.user]) first[e.user] = e.t;
  }
  return first;
}

std::vector<std::size_t> deviation_ranking(const RegularizationPath& path) {
  const auto first = first_entry_times(path, BlockKind::kDeviation);
  std::vector<std::size_t> order(first.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (first[a].has_value() != first[b].has_value()) return first[a].has_value();
    if (first[a] && *first[a] != *first[b]) return *first[a] < *first[b];
    return a < b;
  });
  return order;
}

std::vector<BiasRow> bias_report(const ModelState& state,
                                 const ComparisonDataset& dataset,
                                 const RegularizationPath* path) {
  state.check_compatible(dataset);
  std::vector<BiasRow> rows(state.n_users);
  std::optional<std::vector<std::optional<double>>> entries;
  if (path) entries = first_entry_times(*path, BlockKind::kBias);
  for (std::size_t u = 0; u < state.n_users; ++u) {
    BiasRow& row = rows[u];
    row.user = u;
    row.gamma = state.gamma[u];
    for (std::size_t k = dataset.user_begin(u); k < dataset.user_end(u); ++k) {
      const double y = dataset.outcome()[k];
      if (y > 0.0) ++row.left_count;
      if (y < 0.0) ++row.right_count;
    }
    if (entries && u < entries->size()) row.first_entry = (*entries)[u];
  }
  std::stable_sort(rows.begin(), rows.end(), [&](const BiasRow& a, const BiasRow& b) {
    const bool a_on = a.gamma != 0.0;
    const bool b_on = b.gamma != 0.0;
    if (a_on != b_on) return a_on;
    if (path) {
      if (a.first_entry.has_value() != b.first_entry.has_value()) {
        return a.first_entry.has_value();
      }
      if (a.first_entry && *a.first_entry != *b.first_entry) {
        return *a.first_entry < *b.first_entry;
      }
    }
    if (std::abs(a.gamma) != std::abs(b.gamma)) {
      return std::abs(a.gamma) > std::abs(b.gamma);
    }
    return a.user < b.user;
  });
  return rows;
}

std::vector<std::size_t> dense_ranks(std::span<const double> scores) {
  std::vector<double> distinct(scores.begin(), scores.end());
  std::sort(distinct.begin(), distinct.end(), std::greater<>());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<std::size_t> ranks(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto pos = std::lower_bound(distinct.begin(), distinct.end(), scores[i],
                                      std::greater<>());
    ranks[i] = static_cast<std::size_t>(pos - distinct.begin()) + 1;
  }
  return ranks;
}

std::vector<std::vector<std::size_t>> rank_compare(
    const Scores& scores, std::span<const std::size_t> users) {
  std::vector<std::vector<std::size_t>> out;
  out.push_back(dense_ranks(scores.common));
  for (std::size_t u : users) {
    if (u >= scores.personalized.size()) {
      throw Error(ErrorCode::kOutOfRange, "user index out of range");
    }
    out.push_back(dense_ranks(scores.personalized[u]));
  }
  return out;
}

}  // namespace mepath
