#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aqicast/date.hpp"

namespace aqicast {

enum class ColumnKind { kKey, kNumeric, kIndicator };

struct ColumnDescriptor {
  std::string name;
  ColumnKind kind;
};

using Cell = std::optional<double>;

struct NumericColumn {
  /// Column name as written in files, e.g. "PM2.5 (ug/m3)".
  std::string name;
  /// Canonical variable id, e.g. "PM2.5". Equals `name` for unmapped columns.
  std::string variable;
  ColumnKind kind = ColumnKind::kNumeric;
  std::vector<Cell> cells;

  std::size_t missing_count() const;
};

/// Preprocessing progress. Steps must run in this order.
enum class Stage : int {
  kRaw = 0,
  kGroupImputed,
  kZeroFilled,
  kSelected,
  kSplit,
  kEncoded,
  kScaled,
};

std::string_view stage_name(Stage stage);

enum class SplitRole { kUnsplit, kTrain, kTest };

/// Per-input-file bookkeeping.
struct SourceFile {
  std::string path;
  std::size_t data_lines = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<std::string> notes;
};

struct StationDayRecord {
  std::string state;
  std::string city;
  std::string station;
  Date date;
  /// Canonical variable id -> reading.
  std::map<std::string, Cell> readings;
  Cell aqi;
};

/// Column-oriented station-day table. Rows are sorted by (station, date) and
/// (station, date) pairs are unique; `validate()` checks both.
struct DataTable {
  std::vector<std::string> state;
  std::vector<std::string> city;
  std::vector<std::string> station;
  std::vector<Date> date;
  std::vector<NumericColumn> numeric;
  std::vector<SourceFile> provenance;
  Stage stage = Stage::kRaw;
  SplitRole role = SplitRole::kUnsplit;

  std::size_t rows() const { return date.size(); }
  bool empty() const { return date.empty(); }

  /// Key descriptors (State, City, Station, Date) followed by numeric columns.
  std::vector<ColumnDescriptor> schema() const;

  /// Lookup by file name first, then by canonical variable id.
  const NumericColumn* find(std::string_view name_or_variable) const;
  NumericColumn* find(std::string_view name_or_variable);
  const NumericColumn& at(std::string_view name_or_variable) const;

  StationDayRecord record(std::size_t row) const;

  /// New table with the given rows, in the given order; stage and role kept.
  DataTable take_rows(std::span<const std::size_t> rows) const;

  void add_row(const std::string& state_value, const std::string& city_value,
               const std::string& station_value, Date day);

  /// Throws DataError when lengths disagree, names repeat, or sort order breaks.
  void validate() const;

  /// Restores (station, date) order.
  void sort_rows();
};

}  // namespace aqicast
