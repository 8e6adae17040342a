#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "aqicast/models/booster.hpp"
#include "aqicast/models/forest.hpp"
#include "aqicast/models/svr.hpp"
#include "aqicast/models/tree.hpp"
#include "aqicast/table.hpp"

namespace aqicast::models {

/// Predicts the training-target mean; the reference row of every comparison.
struct MeanModel {
  FeatureSchema schema;
  double mean = 0.0;
  std::vector<double> predict(const Matrix& X) const { return std::vector<double>(X.rows(), mean); }
};

struct TreeModel {
  FeatureSchema schema;
  TreeParams params;
  DecisionTree tree;
  std::vector<double> predict(const Matrix& X) const { return tree.predict(X); }
};

using Model = std::variant<MeanModel, TreeModel, ForestModel, BoosterModel, SvrModel>;

enum class Family { kMean, kTree, kForest, kBoostOblivious, kBoostLevel, kSvr };

/// mean | tree | forest | boost-oblivious | boost-level | svr
Family parse_family(const std::string& token);
std::string family_name(Family family);
Family family_of(const Model& model);

/// Builds the family's parameter struct from JSON (unknown keys are errors) and fits.
Model fit_model(Family family, const nlohmann::json& params, const FeatureFrame& frame, std::span<const double> y,
                std::size_t threads = 1);

const FeatureSchema& schema_of(const Model& model);

/// Checks the frame's columns against the training schema, then predicts.
std::vector<double> predict(const Model& model, const FeatureFrame& frame);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const Model& model);
Model model_from_json(const nlohmann::json& doc);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

struct TrainingData {
  FeatureFrame frame;
  std::vector<double> y;
  /// Table row behind each matrix row.
  std::vector<std::size_t> source_rows;
  std::size_t dropped_missing_target = 0;
};

/// Every numeric and indicator column except the target, in table order.
/// Rows without a target are skipped; a missing feature value is a DataError.
TrainingData training_data(const DataTable& table, const std::string& target = "AQI");

/// Features only, for prediction. The target column is ignored if present.
FeatureFrame feature_frame(const DataTable& table, const std::string& target = "AQI");

}  // namespace aqicast::models
