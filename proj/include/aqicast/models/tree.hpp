#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "aqicast/models/matrix.hpp"
#include "aqicast/random.hpp"

namespace aqicast::models {

struct TreeParams {
  /// nullopt grows until leaves are pure or min_samples_leaf stops them.
  std::optional<std::size_t> max_depth;
  std::size_t min_samples_leaf = 1;
  /// Features drawn per split; nullopt or >= d means all features.
  std::optional<std::size_t> max_features;
};

struct TreeNode {
  /// -1 for leaves.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  /// Mean target of the training rows routed here.
  double value = 0.0;
  std::size_t samples = 0;

  bool is_leaf() const { return feature < 0; }
};

/// CART regression tree. Rows with x[feature] <= threshold go left.
class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict_row(std::span<const double> x) const { return nodes_[leaf_of(x)].value; }
  std::vector<double> predict(const Matrix& X) const;
  /// Node index of the leaf that x reaches.
  std::size_t leaf_of(std::span<const double> x) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& doc);

 private:
  std::vector<TreeNode> nodes_;
};

/// Exact greedy variance-reduction tree on all rows of X.
DecisionTree fit_tree(const Matrix& X, std::span<const double> y, const TreeParams& params = {});

/// Fits on the listed rows (repeats allowed, as in a bootstrap sample).
/// `rng` drives per-split feature sampling when max_features < d.
DecisionTree fit_tree_rows(const Matrix& X, std::span<const double> y, std::span<const std::size_t> rows,
                           const TreeParams& params, Rng* rng);

}  // namespace aqicast::models
