#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aqicast/table.hpp"

namespace aqicast::diagnostics {

struct ColumnSummary {
  std::string column;
  std::size_t count = 0;
  std::optional<double> mean, std, min, q25, q50, q75, max;
};

struct DescribeTable {
  std::vector<ColumnSummary> columns;
  void write_csv(const std::string& path) const;
};

/// count/mean/sample std/min/quartiles/max over present cells of each numeric column.
DescribeTable describe(const DataTable& table);
ColumnSummary describe_column(const std::string& name, const std::vector<Cell>& cells);

struct CorrelationMatrix {
  std::vector<std::string> columns;
  /// Row-major; nullopt where a column has zero variance or too few pairs.
  std::vector<std::optional<double>> values;

  std::optional<double> at(std::size_t i, std::size_t j) const { return values[i * columns.size() + j]; }
  void write_csv(const std::string& path) const;
};

/// Pairwise-complete Pearson correlation over numeric (non-indicator) columns.
CorrelationMatrix pearson_matrix(const DataTable& table);
std::optional<double> pearson(std::span<const Cell> x, std::span<const Cell> y);

enum class HeatmapGroup { kState, kCity };

struct Heatmap {
  std::string group_value;
  std::vector<int> years;
  /// years.size() x 12; nullopt for months without data.
  std::vector<std::array<std::optional<double>, 12>> cells;
  void write_csv(const std::string& path) const;
};

/// Mean AQI per (year, month) for one state or city.
Heatmap monthly_heatmap(const DataTable& table, HeatmapGroup group, const std::string& value,
                        const std::string& target = "AQI");

struct DecompositionResult {
  std::size_t period = 0;
  /// nullopt at the ends where the centred moving average is undefined.
  std::vector<std::optional<double>> trend;
  std::vector<double> seasonal;
  std::vector<std::optional<double>> residual;
  /// One value per phase, summing to zero.
  std::vector<double> pattern;
  void write_csv(const std::string& path) const;
};

/// Classical additive decomposition with a centred moving average (2 x m for even m).
DecompositionResult seasonal_decompose(std::span<const double> series, std::size_t period);

enum class AdfVariant { kNone, kConstant, kConstantTrend };

struct AdfReport {
  double statistic = 0.0;
  std::size_t lags = 0;
  std::size_t nobs = 0;
  AdfVariant variant = AdfVariant::kConstant;
  double crit_1 = 0.0, crit_5 = 0.0, crit_10 = 0.0;
  std::string p_value_bracket;
  bool stationary = false;

  nlohmann::json to_json() const;
};

/// Schwert rule: floor(12 (n / 100)^(1/4)).
std::size_t schwert_max_lag(std::size_t n);

/// Finite-sample MacKinnon critical value for the given significance (0.01, 0.05, 0.10).
double adf_critical_value(AdfVariant variant, double level, std::size_t nobs);

/// Dickey-Fuller regression of the first difference on the lagged level,
/// `max_lag` lagged differences and the deterministic terms of `variant`.
/// Stationary when the t-ratio on the lagged level is below the 5% critical value.
AdfReport adf_test(std::span<const double> series, std::optional<std::size_t> max_lag = std::nullopt,
                   AdfVariant variant = AdfVariant::kConstant);

enum class Scope { kState, kCity, kStation };

struct Series {
  std::vector<Date> dates;
  std::vector<double> values;
  /// Interior days with no data, filled by linear interpolation.
  std::size_t interpolated = 0;
};

/// Daily mean of `column` over the rows whose state/city/station equals `value`.
/// Starts at the first and ends at the last day with data; days in between
/// without data are interpolated linearly.
Series daily_series(const DataTable& table, Scope scope, const std::string& value, const std::string& column = "AQI");

/// Calendar-month means of a daily series, dated on the first of each month.
Series monthly_means(const Series& daily);

/// Autocorrelation at lags 0..nlags using the biased 1/n autocovariance.
std::vector<double> acf(std::span<const double> series, std::size_t nlags);

/// Partial autocorrelation at lags 0..nlags via Durbin-Levinson on the ACF.
std::vector<double> pacf(std::span<const double> series, std::size_t nlags);

}  // namespace aqicast::diagnostics
