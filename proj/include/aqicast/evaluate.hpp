#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aqicast/date.hpp"
#include "aqicast/models/model.hpp"
#include "aqicast/table.hpp"

namespace aqicast::evaluate {

struct MetricsReport {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  /// Undefined when the actuals are constant.
  std::optional<double> r2;
  /// Percent, over rows with a nonzero actual; undefined when there are none.
  std::optional<double> mape;
  std::size_t n = 0;
  std::size_t mape_excluded = 0;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& doc);
};

MetricsReport metrics(std::span<const double> y, std::span<const double> yhat);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
};

struct ResidualReport {
  double mean = 0.0;
  double median = 0.0;
  /// Sample standard deviation.
  double std = 0.0;
  std::vector<std::pair<double, double>> quantiles;
  Histogram histogram;

  nlohmann::json to_json() const;
};

/// Residuals are y - yhat; histogram has `bins` equal-width bins over [min, max].
ResidualReport residual_report(std::span<const double> y, std::span<const double> yhat, std::size_t bins = 20);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  Date train_end;
  Date validation_start;
  Date validation_end;
};

/// Chronological expanding-window splits over the unique dates. The unique dates are cut
/// into folds + 1 equal blocks (remainder goes to the first training window); fold k trains
/// on everything before block k + 1 and validates on that block.
std::vector<Fold> expanding_window_folds(std::span<const Date> dates, std::size_t folds);

struct GridAxis {
  std::string name;
  std::vector<nlohmann::json> values;
};

/// Cartesian parameter grid. Axes and values keep their declared order; the
/// last axis varies fastest in the enumeration. No axes means one empty combination.
struct ParamGrid {
  std::vector<GridAxis> axes;

  std::size_t size() const;
  nlohmann::json combination(std::size_t index) const;
  nlohmann::ordered_json to_json() const;
  /// {"axis": [values...], ...}; a scalar value is a one-element axis.
  static ParamGrid from_json(const nlohmann::ordered_json& doc);
};

struct GridEntry {
  nlohmann::json params;
  std::vector<double> fold_rmse;
  /// +inf when any fold failed to train.
  double mean_rmse = 0.0;
  std::string error;
};

struct GridSearchResult {
  models::Family family = models::Family::kMean;
  ParamGrid grid;
  std::size_t folds = 0;
  std::vector<GridEntry> entries;
  std::size_t best_index = 0;
  std::size_t tied_with_best = 0;
  std::string tie_break;

  const GridEntry& best() const { return entries.at(best_index); }
  nlohmann::ordered_json to_json() const;
};

struct GridOptions {
  std::size_t folds = 3;
  std::size_t threads = 1;
  std::string target = "AQI";
  /// Added as "seed" to every combination of a seeded family that does not set one.
  std::optional<std::uint64_t> seed;
};

GridSearchResult grid_search(models::Family family, const ParamGrid& grid, const DataTable& train,
                             const GridOptions& options = {});

/// Applies the seed default used by grid_search to a single parameter object.
nlohmann::json with_seed(models::Family family, nlohmann::json params, std::optional<std::uint64_t> seed);

struct Prediction {
  std::string station;
  Date date;
  double actual = 0.0;
  double predicted = 0.0;
};

struct Evaluation {
  MetricsReport metrics;
  ResidualReport residuals;
  std::vector<Prediction> predictions;
  std::size_t dropped_missing_target = 0;

  nlohmann::json to_json() const;
};

Evaluation evaluate_model(const models::Model& model, const DataTable& test, const std::string& target = "AQI",
                          std::size_t bins = 20);

void write_predictions_csv(const std::vector<Prediction>& rows, const std::filesystem::path& path);
std::vector<Prediction> read_predictions_csv(const std::filesystem::path& path);

struct MatrixRow {
  std::string model;
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> r2;
  std::size_t rank = 0;

  bool operator==(const MatrixRow&) const = default;
};

/// Rows sorted by R2 descending (undefined R2 last, ties keep input order), rank from 1.
struct PerformanceMatrix {
  std::vector<MatrixRow> rows;

  std::vector<std::string> ranking() const;
  const MatrixRow& at(const std::string& model) const;
  std::string to_csv() const;
  static PerformanceMatrix from_csv(const std::string& text);
  nlohmann::json to_json() const;
  static PerformanceMatrix from_json(const nlohmann::json& doc);

  bool operator==(const PerformanceMatrix&) const = default;
};

PerformanceMatrix compare_models(const std::vector<std::pair<std::string, MetricsReport>>& entries);

}  // namespace aqicast::evaluate
