#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aqicast/models/tree.hpp"

namespace aqicast::models {

enum class MaxFeatures { kAuto, kSqrt, kLog2 };

MaxFeatures parse_max_features(const std::string& token);
std::string to_string(MaxFeatures rule);

/// auto -> d, sqrt -> ceil(sqrt d), log2 -> ceil(log2 d); never below 1.
std::size_t resolve_max_features(MaxFeatures rule, std::size_t d);

struct ForestParams {
  std::size_t n_estimators = 100;
  std::optional<std::size_t> max_depth;
  MaxFeatures max_features = MaxFeatures::kAuto;
  std::size_t min_samples_leaf = 1;
  bool bootstrap = true;
  std::uint64_t seed = 42;
  /// Worker threads for tree fitting; results do not depend on it.
  std::size_t threads = 1;

  nlohmann::json to_json() const;
  static ForestParams from_json(const nlohmann::json& doc);
};

struct ForestModel {
  FeatureSchema schema;
  ForestParams params;
  std::vector<DecisionTree> trees;
  /// Row indices each tree was trained on (empty when bootstrap is off).
  std::vector<std::vector<std::size_t>> bootstrap_indices;

  double predict_row(std::span<const double> x) const;
  std::vector<double> predict(const Matrix& X) const;
};

/// Bagged CART trees; tree k draws from Rng::substream(seed, "forest", k), so
/// the fit is independent of the thread count.
ForestModel fit_forest(const FeatureFrame& frame, std::span<const double> y, const ForestParams& params = {});

}  // namespace aqicast::models
