#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "aqicast/models/tree.hpp"

namespace aqicast::models {

/// Symmetric tree: every node on level l tests the same (feature, threshold),
/// so a depth-d tree has exactly 2^d leaves.
struct ObliviousTree {
  std::vector<int> features;
  std::vector<double> thresholds;
  std::vector<double> leaf_values;

  std::size_t depth() const { return features.size(); }

  /// Bit l of the index is set when x[features[l]] > thresholds[l].
  std::size_t leaf_index(std::span<const double> x) const {
    std::size_t index = 0;
    for (std::size_t l = 0; l < features.size(); ++l) {
      index |= static_cast<std::size_t>(x[static_cast<std::size_t>(features[l])] > thresholds[l]) << l;
    }
    return index;
  }

  double predict_row(std::span<const double> x) const { return leaf_values[leaf_index(x)]; }

  /// Expands into an ordinary binary tree with identical predictions.
  DecisionTree to_decision_tree() const;

  nlohmann::json to_json() const;
  static ObliviousTree from_json(const nlohmann::json& doc);
};

/// Fits a depth-`depth` oblivious tree to targets on `rows` (0/1 sample).
/// Each level picks the (feature, threshold) with the largest summed
/// variance reduction over all current leaves. Empty leaves take the mean of
/// their nearest non-empty ancestor.
ObliviousTree fit_oblivious_tree(const Matrix& X, std::span<const double> target, std::span<const std::size_t> rows,
                                 std::size_t depth);

enum class TreeShape { kLevelwise, kOblivious };

TreeShape parse_tree_shape(const std::string& token);
std::string to_string(TreeShape shape);

struct BoosterParams {
  std::size_t iterations = 100;
  double learning_rate = 0.1;
  std::size_t depth = 6;
  TreeShape shape = TreeShape::kOblivious;
  /// Fraction of rows drawn without replacement per iteration.
  double subsample = 1.0;
  /// Stop once an iteration improves training RMSE by no more than this.
  double tolerance = 0.0;
  std::size_t min_samples_leaf = 1;
  std::uint64_t seed = 42;

  nlohmann::json to_json() const;
  /// Accepts the grid keys depth, learning_rate, iterations, loss_function
  /// (RMSE only) and random_seed alongside the fields above.
  static BoosterParams from_json(const nlohmann::json& doc, TreeShape shape);
  void validate() const;
};

using BoostedTree = std::variant<DecisionTree, ObliviousTree>;

struct BoosterModel {
  FeatureSchema schema;
  BoosterParams params;
  double base_score = 0.0;
  std::vector<BoostedTree> trees;
  /// Training RMSE after 0, 1, ..., trees.size() trees.
  std::vector<double> train_rmse;

  double predict_row(std::span<const double> x) const;
  std::vector<double> predict(const Matrix& X) const;
};

/// Squared-loss gradient boosting: each tree fits the current residuals and
/// is added with weight learning_rate.
BoosterModel fit_booster(const FeatureFrame& frame, std::span<const double> y, const BoosterParams& params = {});

}  // namespace aqicast::models
