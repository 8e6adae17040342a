#include "aqicast/table.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

#include "aqicast/error.hpp"

namespace aqicast {

std::size_t NumericColumn::missing_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const Cell& c) { return !c.has_value(); }));
}

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kRaw: return "raw";
    case Stage::kGroupImputed: return "group-imputed";
    case Stage::kZeroFilled: return "zero-filled";
    case Stage::kSelected: return "features-selected";
    case Stage::kSplit: return "split";
    case Stage::kEncoded: return "encoded";
    case Stage::kScaled: return "scaled";
  }
  return "unknown";
}

std::vector<ColumnDescriptor> DataTable::schema() const {
  std::vector<ColumnDescriptor> out{{"State", ColumnKind::kKey},
                                    {"City", ColumnKind::kKey},
                                    {"Station", ColumnKind::kKey},
                                    {"Date", ColumnKind::kKey}};
  for (const auto& col : numeric) out.push_back({col.name, col.kind});
  return out;
}

const NumericColumn* DataTable::find(std::string_view key) const {
  for (const auto& col : numeric) {
    if (col.name == key) return &col;
  }
  for (const auto& col : numeric) {
    if (col.variable == key) return &col;
  }
  return nullptr;
}

NumericColumn* DataTable::find(std::string_view key) {
  return const_cast<NumericColumn*>(std::as_const(*this).find(key));
}

const NumericColumn& DataTable::at(std::string_view key) const {
  const auto* col = find(key);
  if (!col) throw SchemaError("no column named '" + std::string(key) + "'");
  return *col;
}

StationDayRecord DataTable::record(std::size_t row) const {
  StationDayRecord rec{state.at(row), city.at(row), station.at(row), date.at(row), {}, {}};
  for (const auto& col : numeric) {
    if (col.variable == "AQI") {
      rec.aqi = col.cells[row];
    } else {
      rec.readings[col.variable] = col.cells[row];
    }
  }
  return rec;
}

DataTable DataTable::take_rows(std::span<const std::size_t> rows) const {
  DataTable out;
  out.provenance = provenance;
  out.stage = stage;
  out.role = role;
  out.numeric.reserve(numeric.size());
  for (const auto& col : numeric) {
    NumericColumn c{col.name, col.variable, col.kind, {}};
    c.cells.reserve(rows.size());
    out.numeric.push_back(std::move(c));
  }
  for (std::size_t r : rows) {
    out.add_row(state.at(r), city.at(r), station.at(r), date.at(r));
    for (std::size_t c = 0; c < numeric.size(); ++c) out.numeric[c].cells.push_back(numeric[c].cells[r]);
  }
  return out;
}

void DataTable::add_row(const std::string& state_value, const std::string& city_value,
                        const std::string& station_value, Date day) {
  state.push_back(state_value);
  city.push_back(city_value);
  station.push_back(station_value);
  date.push_back(day);
}

void DataTable::validate() const {
  const std::size_t n = rows();
  if (state.size() != n || city.size() != n || station.size() != n) {
    throw DataError("key column lengths disagree");
  }
  std::set<std::string> names{"State", "City", "Station", "Date"};
  for (const auto& col : numeric) {
    if (col.cells.size() != n) throw DataError("column '" + col.name + "' has wrong length");
    if (!names.insert(col.name).second) throw DataError("duplicate column name '" + col.name + "'");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (std::tie(station[i - 1], date[i - 1]) >= std::tie(station[i], date[i])) {
      throw DataError("rows not strictly sorted by (station, date) at row " + std::to_string(i));
    }
  }
}

void DataTable::sort_rows() {
  std::vector<std::size_t> order(rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(station[a], date[a]) < std::tie(station[b], date[b]);
  });
  *this = take_rows(order);
}

}  // namespace aqicast
