#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aqicast/table.hpp"

namespace aqicast::ingest {

struct NumericColumnSpec {
  std::string header;
  std::string variable;
  /// Negative readings become missing (sensor error). Off for temperature.
  bool nonnegative = true;
};

/// Maps file headers onto key roles and canonical variable ids.
struct SchemaConfig {
  std::vector<std::string> state_headers{"State"};
  std::vector<std::string> city_headers{"City"};
  std::vector<std::string> station_headers{"Monitoring Station", "Station"};
  std::vector<std::string> date_headers{"Date"};
  std::vector<NumericColumnSpec> numeric;
  /// Matched case-insensitively after trimming.
  std::vector<std::string> missing_sentinels{"", "NA", "NaN", "None"};

  /// The 17 measured CPCB variables plus the optional AQI column.
  static SchemaConfig cpcb_default();
  static SchemaConfig from_json(const nlohmann::json& doc);
  static SchemaConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  const NumericColumnSpec* find_header(std::string_view header) const;
};

/// Parses CPCB dashboard exports. Rows with bad dates or duplicate
/// (station, date) keys are rejected and counted per file.
DataTable parse_cpcb_csv(const std::vector<std::filesystem::path>& paths,
                         const SchemaConfig& schema = SchemaConfig::cpcb_default());

/// Reads a table written by write_csv back in. Headers map to variables through
/// `schema`; negative values are kept since later stages store scaled data.
DataTable read_canonical_csv(const std::filesystem::path& path,
                             const SchemaConfig& schema = SchemaConfig::cpcb_default());

/// Canonical form: State,City,Station,Date(ISO),numeric...; empty cell = missing.
void write_csv(const DataTable& table, const std::filesystem::path& path);
std::string to_csv(const DataTable& table);

struct MissingEntry {
  std::string column;
  std::size_t missing_count = 0;
  double missing_percent = 0.0;
};

struct MissingnessProfile {
  std::size_t total_rows = 0;
  /// Columns with at least one gap, most-missing first.
  std::vector<MissingEntry> per_column;

  nlohmann::json to_json() const;
};

/// round(100 * count / total, 1)
double missing_percent(std::size_t count, std::size_t total);

MissingnessProfile profile_missing(const DataTable& table);

struct MonthlyGap {
  std::string station;
  int year = 0;
  unsigned month = 0;
  std::string column;
  std::size_t missing_count = 0;
  std::size_t rows_in_month = 0;
  bool month_fully_missing = false;
};

std::vector<MonthlyGap> monthly_gap_report(const DataTable& table);
void write_gap_report_csv(const std::vector<MonthlyGap>& gaps, const std::filesystem::path& path);

}  // namespace aqicast::ingest
