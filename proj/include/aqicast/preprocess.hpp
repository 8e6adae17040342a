#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "aqicast/table.hpp"

namespace aqicast::preprocess {

/// The eight pollutant features kept after feature selection.
const std::vector<std::string>& retained_pollutants();

/// Meteorological factors, volatile organics and ozone.
const std::vector<std::string>& default_drop_list();

inline constexpr const char* kTarget = "AQI";

struct ImputationEntry {
  std::string station;
  int year = 0;
  unsigned month = 0;
  std::string column;
  std::size_t original_missing = 0;
  std::size_t mean_filled = 0;
  std::size_t zero_filled = 0;
  std::optional<double> group_mean;
};

struct ImputationLog {
  std::vector<ImputationEntry> entries;
  std::vector<std::string> warnings;

  std::size_t total_mean_filled() const;
  std::size_t total_zero_filled() const;
  /// Folds another pass into this log, matching on (station, year, month, column).
  void merge(const ImputationLog& other);
  nlohmann::json to_json() const;
};

/// Fills each missing cell with the mean of the present values of its
/// (station, year, month) group. Groups with nothing present stay missing.
/// Columns listed in `exclude` (the target by default) are left alone.
std::pair<DataTable, ImputationLog> impute_group_mean(const DataTable& table,
                                                      const std::vector<std::string>& exclude = {kTarget});

/// Zero-fills what group means could not reach, in `columns` only.
std::pair<DataTable, ImputationLog> fill_remaining_zero(
    const DataTable& table, const std::vector<std::string>& columns = retained_pollutants());

struct SelectionResult {
  DataTable table;
  std::vector<std::string> dropped;
  std::vector<std::string> warnings;
};

SelectionResult select_features(const DataTable& table, const std::vector<std::string>& drop = default_drop_list(),
                                const std::string& target = kTarget);

struct FlaggedValue {
  std::size_t row = 0;
  std::string station;
  Date date;
  double value = 0.0;
};

struct ColumnOutliers {
  std::string column;
  std::size_t n = 0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double lower_fence = 0.0;
  double upper_fence = 0.0;
  std::vector<FlaggedValue> flagged;
  /// Set instead of the statistics when the column has fewer than 4 values.
  std::string error;
};

struct OutlierReport {
  double k = 1.5;
  std::vector<ColumnOutliers> columns;
  nlohmann::json to_json() const;
};

/// Tukey fences on one column; throws DataError for fewer than four values.
ColumnOutliers column_outliers(const std::string& name, const std::vector<Cell>& cells, double k = 1.5);

/// Flags (never removes) values outside [Q1 - k IQR, Q3 + k IQR] per numeric column.
OutlierReport outlier_report(const DataTable& table, double k = 1.5);

struct SplitSpec {
  Date train_start;
  Date boundary;
  Date test_end;
};

/// train = [train_start, boundary), test = [boundary, test_end].
std::pair<DataTable, DataTable> time_split(const DataTable& table, const SplitSpec& spec);

struct EncodedColumn {
  std::string source;
  std::vector<std::string> categories;  // code-point order
  std::vector<std::string> outputs;     // "<source>=<category>"
};

struct EncodingMap {
  std::vector<EncodedColumn> columns;
  nlohmann::json to_json() const;
  static EncodingMap from_json(const nlohmann::json& doc);
};

struct EncodingResult {
  DataTable table;
  EncodingMap map;
  std::vector<std::string> warnings;
};

/// Fits categories on `train` (key columns State/City/Station) and encodes it.
EncodingResult one_hot(const DataTable& train, const std::vector<std::string>& columns = {"State", "City"});

/// Encodes with a fitted map; unseen categories give an all-zero row plus a warning.
EncodingResult apply_one_hot(const EncodingMap& map, const DataTable& table);

struct FeatureScale {
  std::string column;
  double mean = 0.0;
  double std = 0.0;
  bool scaled = true;
};

struct ScalerParams {
  std::vector<FeatureScale> features;
  std::string fitted_on = "train";
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static ScalerParams from_json(const nlohmann::json& doc);
};

/// Population mean/std of each numeric feature of a train-tagged table.
/// Indicator columns and the target are never scaled.
ScalerParams fit_scaler(const DataTable& train, const std::string& target = kTarget);

DataTable apply_scaler(const ScalerParams& params, const DataTable& table);

struct PrepConfig {
  std::vector<std::string> drop = default_drop_list();
  std::vector<std::string> encode = {"State", "City"};
  std::optional<Date> train_start;
  Date boundary{2022, 10, 1};
  std::optional<Date> test_end;
  double outlier_k = 1.5;
};

struct PrepResult {
  DataTable imputed;  // after group-mean and zero fill, before selection
  DataTable train;
  DataTable test;
  ImputationLog imputation;
  OutlierReport outliers;
  EncodingMap encoding;
  ScalerParams scaler;
  std::vector<std::string> warnings;
};

/// group-mean -> zero-fill -> select -> split -> encode -> scale.
PrepResult prepare(const DataTable& raw, const PrepConfig& config);

}  // namespace aqicast::preprocess
