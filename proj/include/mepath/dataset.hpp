#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mepath {

// One pairwise judgement as presented to the annotator. A positive outcome
// means the left item was preferred. The pair is never re-oriented, so the
// per-user bias term keeps its "clicks the left side" meaning.
struct ComparisonRecord {
  std::string user;
  std::size_t left = 0;
  std::size_t right = 0;
  double outcome = 0.0;
  double weight = 1.0;
};

enum class FeatureMode { kIdentity, kExplicit };

// Item feature matrix, row i holding the features of item i. Identity mode is
// never materialized; the feature dimension then equals the item count.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;

  static FeatureMatrix identity(std::size_t n_items);
  static FeatureMatrix dense(std::size_t n_items, std::size_t dim,
                             std::vector<double> row_major);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  FeatureMode mode() const { return mode_; }
  bool is_identity() const { return mode_ == FeatureMode::kIdentity; }

  double at(std::size_t item, std::size_t feature) const {
    if (is_identity()) return item == feature ? 1.0 : 0.0;
    return data_[item * cols_ + feature];
  }

  // (phi_left - phi_right)^T coef
  double diff_dot(std::size_t left, std::size_t right,
                  const double* coef) const {
    if (is_identity()) return coef[left] - coef[right];
    const double* a = data_.data() + left * cols_;
    const double* b = data_.data() + right * cols_;
    double s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += (a[j] - b[j]) * coef[j];
    return s;
  }

  // out += scale * (phi_left - phi_right)
  void diff_axpy(double scale, std::size_t left, std::size_t right,
                 double* out) const {
    if (is_identity()) {
      out[left] += scale;
      out[right] -= scale;
      return;
    }
    const double* a = data_.data() + left * cols_;
    const double* b = data_.data() + right * cols_;
    for (std::size_t j = 0; j < cols_; ++j) out[j] += scale * (a[j] - b[j]);
  }

  // Returns Phi * coef, one value per item.
  std::vector<double> apply(std::span<const double> coef) const;

  // Row-major values; empty in identity mode.
  std::span<const double> data() const { return data_; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  FeatureMode mode_ = FeatureMode::kIdentity;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// The comparison multigraph together with the item features.
//
// Users are densely reindexed in lexicographic order of their ids. Records are
// stored grouped by user (stable within a user) so the solvers can sweep one
// user's block contiguously; `original_index` maps back to input order.
class ComparisonDataset {
 public:
  ComparisonDataset() = default;

  std::size_t size() const { return outcome_.size(); }
  std::size_t n_users() const { return user_ids_.size(); }
  std::size_t n_items() const { return features_.rows(); }
  std::size_t dim() const { return features_.cols(); }
  const FeatureMatrix& features() const { return features_; }

  // Per-record arrays in grouped (by-user) order.
  std::span<const std::uint32_t> user() const { return user_; }
  std::span<const std::uint32_t> left() const { return left_; }
  std::span<const std::uint32_t> right() const { return right_; }
  std::span<const double> outcome() const { return outcome_; }
  std::span<const double> weight() const { return weight_; }
  std::span<const std::size_t> original_index() const { return original_; }

  // Grouped positions [user_begin(u), user_begin(u+1)) belong to user u.
  std::size_t user_begin(std::size_t u) const { return user_offsets_[u]; }
  std::size_t user_end(std::size_t u) const { return user_offsets_[u + 1]; }
  std::size_t user_count(std::size_t u) const {
    return user_offsets_[u + 1] - user_offsets_[u];
  }

  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }

  bool is_binary() const;
  bool items_connected() const;

  // Records in input order.
  std::vector<ComparisonRecord> records() const;

  // Records restricted to the given input-order indices. The user and item id
  // spaces are kept, so parameters fitted on a subset index like the parent.
  // An empty selection yields an empty dataset (callers decide if that is an
  // error).
  ComparisonDataset subset(std::span<const std::size_t> input_indices) const;

  friend bool operator==(const ComparisonDataset&,
                         const ComparisonDataset&) = default;

 private:
  friend ComparisonDataset build_dataset(std::span<const ComparisonRecord>,
                                         FeatureMatrix,
                                         std::vector<std::string>);

  // Builds the grouped arrays from input-order per-record values.
  static ComparisonDataset assemble(FeatureMatrix features,
                                    std::vector<std::string> user_ids,
                                    std::vector<std::string> item_ids,
                                    std::span<const std::uint32_t> user,
                                    std::span<const std::uint32_t> left,
                                    std::span<const std::uint32_t> right,
                                    std::span<const double> outcome,
                                    std::span<const double> weight);

  FeatureMatrix features_;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
  std::vector<std::uint32_t> user_;
  std::vector<std::uint32_t> left_;
  std::vector<std::uint32_t> right_;
  std::vector<double> outcome_;
  std::vector<double> weight_;
  std::vector<std::size_t> original_;
  std::vector<std::size_t> user_offsets_;
};

// Validates and indexes the records. Item ids default to "0".."n-1" when not
// supplied. Binary-outcome checks are deferred to fit time.
ComparisonDataset build_dataset(std::span<const ComparisonRecord> records,
                                FeatureMatrix features,
                                std::vector<std::string> item_ids = {});

}  // namespace mepath
