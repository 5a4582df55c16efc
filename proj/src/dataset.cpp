#include "mepath/dataset.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "mepath/error.hpp"

namespace mepath {

FeatureMatrix FeatureMatrix::identity(std::size_t n_items) {
  FeatureMatrix f;
  f.mode_ = FeatureMode::kIdentity;
  f.rows_ = n_items;
  f.cols_ = n_items;
  return f;
}

FeatureMatrix FeatureMatrix::dense(std::size_t n_items, std::size_t dim,
                                   std::vector<double> row_major) {
  if (row_major.size() != n_items * dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature data has " + std::to_string(row_major.size()) +
                    " values, expected " + std::to_string(n_items * dim));
  }
  FeatureMatrix f;
  f.mode_ = FeatureMode::kExplicit;
  f.rows_ = n_items;
  f.cols_ = dim;
  f.data_ = std::move(row_major);
  return f;
}

std::vector<double> FeatureMatrix::apply(std::span<const double> coef) const {
  if (coef.size() != cols_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "coefficient length " + std::to_string(coef.size()) +
                    " does not match feature dimension " +
                    std::to_string(cols_));
  }
  if (is_identity()) return {coef.begin(), coef.end()};
  std::vector<double> out(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* row = data_.data() + i * cols_;
    double s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += row[j] * coef[j];
    out[i] = s;
  }
  return out;
}

ComparisonDataset ComparisonDataset::assemble(
    FeatureMatrix features, std::vector<std::string> user_ids,
    std::vector<std::string> item_ids, std::span<const std::uint32_t> user,
    std::span<const std::uint32_t> left, std::span<const std::uint32_t> right,
    std::span<const double> outcome, std::span<const double> weight) {
  ComparisonDataset ds;
  ds.features_ = std::move(features);
  ds.user_ids_ = std::move(user_ids);
  ds.item_ids_ = std::move(item_ids);

  const std::size_t m = user.size();
  const std::size_t n_users = ds.user_ids_.size();
  ds.user_offsets_.assign(n_users + 1, 0);
  for (std::size_t k = 0; k < m; ++k) ++ds.user_offsets_[user[k] + 1];
  std::partial_sum(ds.user_offsets_.begin(), ds.user_offsets_.end(),
                   ds.user_offsets_.begin());

  ds.user_.resize(m);
  ds.left_.resize(m);
  ds.right_.resize(m);
  ds.outcome_.resize(m);
  ds.weight_.resize(m);
  ds.original_.resize(m);
  std::vector<std::size_t> cursor(ds.user_offsets_.begin(),
                                  ds.user_offsets_.end() - 1);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t pos = cursor[user[k]]++;
    ds.user_[pos] = user[k];
    ds.left_[pos] = left[k];
    ds.right_[pos] = right[k];
    ds.outcome_[pos] = outcome[k];
    ds.weight_[pos] = weight[k];
    ds.original_[pos] = k;
  }
  return ds;
}

ComparisonDataset build_dataset(std::span<const ComparisonRecord> records,
                                FeatureMatrix features,
                                std::vector<std::string> item_ids) {
  if (records.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "no comparison records");
  }
  const std::size_t n = features.rows();
  if (item_ids.empty()) {
    item_ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) item_ids.push_back(std::to_string(i));
  } else if (item_ids.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "item id count does not match feature rows");
  }

  std::map<std::string, std::uint32_t> user_index;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const ComparisonRecord& r = records[k];
    if (r.left >= n || r.right >= n) {
      throw Error(ErrorCode::kItemIndexOutOfRange,
                  "record " + std::to_string(k) + " references item " +
                      std::to_string(std::max(r.left, r.right)) + " but only " +
                      std::to_string(n) + " items have features");
    }
    if (r.left == r.right) {
      throw Error(ErrorCode::kInvalidConfig,
                  "record " + std::to_string(k) + " compares item " +
                      std::to_string(r.left) + " with itself");
    }
    if (!(r.weight >= 0.0)) {
      throw Error(ErrorCode::kInvalidConfig,
                  "record " + std::to_string(k) + " has a negative weight");
    }
    user_index.emplace(r.user, 0);
  }
  std::vector<std::string> user_ids;
  user_ids.reserve(user_index.size());
  for (auto& [id, idx] : user_index) {
    idx = static_cast<std::uint32_t>(user_ids.size());
    user_ids.push_back(id);
  }

  const std::size_t m = records.size();
  std::vector<std::uint32_t> user(m), left(m), right(m);
  std::vector<double> outcome(m), weight(m);
  for (std::size_t k = 0; k < m; ++k) {
    user[k] = user_index.at(records[k].user);
    left[k] = static_cast<std::uint32_t>(records[k].left);
    right[k] = static_cast<std::uint32_t>(records[k].right);
    outcome[k] = records[k].outcome;
    weight[k] = records[k].weight;
  }
  return ComparisonDataset::assemble(std::move(features), std::move(user_ids),
                                     std::move(item_ids), user, left, right,
                                     outcome, weight);
}

bool ComparisonDataset::is_binary() const {
  return std::all_of(outcome_.begin(), outcome_.end(),
                     [](double y) { return y == 1.0 || y == -1.0; });
}

bool ComparisonDataset::items_connected() const {
  const std::size_t n = n_items();
  if (n <= 1) return true;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = n;
  for (std::size_t k = 0; k < size(); ++k) {
    const std::size_t a = find(left_[k]);
    const std::size_t b = find(right_[k]);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

std::vector<ComparisonRecord> ComparisonDataset::records() const {
  std::vector<ComparisonRecord> out(size());
  for (std::size_t pos = 0; pos < size(); ++pos) {
    ComparisonRecord& r = out[original_[pos]];
    r.user = user_ids_[user_[pos]];
    r.left = left_[pos];
    r.right = right_[pos];
    r.outcome = outcome_[pos];
    r.weight = weight_[pos];
  }
  return out;
}

ComparisonDataset ComparisonDataset::subset(
    std::span<const std::size_t> input_indices) const {
  std::vector<std::size_t> position_of(size());
  for (std::size_t pos = 0; pos < size(); ++pos) position_of[original_[pos]] = pos;

  const std::size_t m = input_indices.size();
  std::vector<std::uint32_t> user(m), left(m), right(m);
  std::vector<double> outcome(m), weight(m);
  for (std::size_t k = 0; k < m; ++k) {
    if (input_indices[k] >= size()) {
      throw Error(ErrorCode::kOutOfRange, "subset index out of range");
    }
    const std::size_t pos = position_of[input_indices[k]];
    user[k] = user_[pos];
    left[k] = left_[pos];
    right[k] = right_[pos];
    outcome[k] = outcome_[pos];
    weight[k] = weight_[pos];
  }
  return assemble(features_, user_ids_, item_ids_, user, left, right, outcome,
                  weight);
}

}  // namespace mepath
