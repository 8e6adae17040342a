#include "aqicast/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "aqicast/csv.hpp"
#include "aqicast/error.hpp"

namespace aqicast::ingest {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::optional<double> parse_number(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

int find_header(const csv::Row& header, const std::vector<std::string>& names) {
  for (const auto& name : names) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return static_cast<int>(i);
    }
  }
  return -1;
}

std::vector<std::string> string_list(const nlohmann::json& doc, const char* key,
                                     std::vector<std::string> fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (v.is_string()) return {v.get<std::string>()};
  return v.get<std::vector<std::string>>();
}

struct ParsedRow {
  std::string state, city, station;
  Date date;
  std::vector<Cell> cells;  // indexed by merged column
};

}  // namespace

SchemaConfig SchemaConfig::cpcb_default() {
  SchemaConfig cfg;
  cfg.numeric = {
      {"PM2.5 (ug/m3)", "PM2.5", true},  {"PM10 (ug/m3)", "PM10", true},
      {"NO (ug/m3)", "NO", true},        {"NO2 (ug/m3)", "NO2", true},
      {"NOx (ppb)", "NOx", true},        {"NH3 (ug/m3)", "NH3", true},
      {"SO2 (ug/m3)", "SO2", true},      {"CO (mg/m3)", "CO", true},
      {"Ozone (ug/m3)", "O3", true},     {"Benzene (ug/m3)", "Benzene", true},
      {"Toluene (ug/m3)", "Toluene", true}, {"Xylene (ug/m3)", "Xylene", true},
      {"Temp (degree C)", "Temp", false}, {"RH (%)", "RH", true},
      {"WS (m/s)", "WS", true},          {"WD (deg)", "WD", true},
      {"SR (W/mt2)", "SR", true},        {"Air_Quality_Index", "AQI", true},
  };
  return cfg;
}

SchemaConfig SchemaConfig::from_json(const nlohmann::json& doc) {
  SchemaConfig cfg;
  try {
    cfg.state_headers = string_list(doc, "state", cfg.state_headers);
    cfg.city_headers = string_list(doc, "city", cfg.city_headers);
    cfg.station_headers = string_list(doc, "station", cfg.station_headers);
    cfg.date_headers = string_list(doc, "date", cfg.date_headers);
    cfg.missing_sentinels = string_list(doc, "missing", cfg.missing_sentinels);
    if (doc.contains("numeric")) {
      for (const auto& item : doc.at("numeric")) {
        NumericColumnSpec spec;
        spec.header = item.at("header").get<std::string>();
        spec.variable = item.value("variable", spec.header);
        spec.nonnegative = item.value("nonnegative", true);
        cfg.numeric.push_back(std::move(spec));
      }
    } else {
      cfg.numeric = cpcb_default().numeric;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("schema config: ") + e.what());
  }
  return cfg;
}

SchemaConfig SchemaConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema config " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("schema config " + path.string() + ": " + e.what());
  }
}

nlohmann::json SchemaConfig::to_json() const {
  nlohmann::json doc;
  doc["state"] = state_headers;
  doc["city"] = city_headers;
  doc["station"] = station_headers;
  doc["date"] = date_headers;
  doc["missing"] = missing_sentinels;
  doc["numeric"] = nlohmann::json::array();
  for (const auto& spec : numeric) {
    doc["numeric"].push_back(
        {{"header", spec.header}, {"variable", spec.variable}, {"nonnegative", spec.nonnegative}});
  }
  return doc;
}

const NumericColumnSpec* SchemaConfig::find_header(std::string_view header) const {
  for (const auto& spec : numeric) {
    if (spec.header == header) return &spec;
  }
  return nullptr;
}

DataTable parse_cpcb_csv(const std::vector<std::filesystem::path>& paths, const SchemaConfig& schema) {
  if (paths.empty()) throw DataError("no input files");

  std::set<std::string> sentinels;
  for (const auto& s : schema.missing_sentinels) sentinels.insert(lower(trim(s)));

  DataTable table;
  std::vector<ParsedRow> parsed;
  std::map<std::string, std::size_t> column_index;  // merged column name -> slot
  std::vector<NumericColumnSpec> columns;

  for (const auto& path : paths) {
    const auto records = csv::read_file(path);
    if (records.empty()) throw DataError(path.string() + ": no header row");
    const auto& header = records.front();

    const int state_col = find_header(header, schema.state_headers);
    const int city_col = find_header(header, schema.city_headers);
    const int station_col = find_header(header, schema.station_headers);
    const int date_col = find_header(header, schema.date_headers);
    const std::pair<int, const char*> keys[] = {
        {state_col, "State"}, {city_col, "City"}, {station_col, "Station"}, {date_col, "Date"}};
    for (const auto& [col, role] : keys) {
      if (col < 0) {
        throw SchemaError(path.string() + ": missing required key column '" + role + "'");
      }
    }

    SourceFile source{path.string(), records.size() - 1, 0, 0, {}};
    // file column -> merged slot
    std::vector<std::pair<std::size_t, std::size_t>> mapping;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const int idx = static_cast<int>(i);
      if (idx == state_col || idx == city_col || idx == station_col || idx == date_col) continue;
      const std::string name = trim(header[i]);
      if (name.empty()) continue;
      auto it = column_index.find(name);
      if (it == column_index.end()) {
        const auto* spec = schema.find_header(name);
        columns.push_back(spec ? *spec : NumericColumnSpec{name, name, false});
        it = column_index.emplace(name, columns.size() - 1).first;
        if (!spec) source.notes.push_back("column '" + name + "' not in schema; kept as numeric");
      }
      mapping.emplace_back(i, it->second);
    }

    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto& row = records[r];
      auto cell = [&](int col) -> std::string {
        return static_cast<std::size_t>(col) < row.size() ? trim(row[col]) : std::string{};
      };
      const auto day = Date::parse(cell(date_col));
      if (!day) {
        ++source.rejected;
        source.notes.push_back("line " + std::to_string(r + 1) + ": unparseable date '" +
                               cell(date_col) + "'");
        continue;
      }
      ParsedRow pr{cell(state_col), cell(city_col), cell(station_col), *day, {}};
      pr.cells.resize(columns.size());
      for (const auto& [file_col, slot] : mapping) {
        const std::string text = file_col < row.size() ? trim(row[file_col]) : std::string{};
        if (sentinels.count(lower(text))) continue;
        auto value = parse_number(text);
        if (value && *value < 0.0 && columns[slot].nonnegative) value.reset();
        pr.cells[slot] = value;
      }
      parsed.push_back(std::move(pr));
      ++source.accepted;
    }
    table.provenance.push_back(std::move(source));
  }

  // Stable sort keeps file order for duplicate keys, so the first occurrence wins.
  std::vector<std::size_t> order(parsed.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(parsed[a].station, parsed[a].date) < std::tie(parsed[b].station, parsed[b].date);
  });

  // Rows are attributed to files in input order, so map parsed index -> file.
  std::vector<std::size_t> owner(parsed.size());
  {
    std::size_t idx = 0;
    for (std::size_t f = 0; f < table.provenance.size(); ++f) {
      for (std::size_t k = 0; k < table.provenance[f].accepted; ++k) owner[idx++] = f;
    }
  }

  for (const auto& spec : columns) {
    const ColumnKind kind =
        spec.header.find('=') != std::string::npos ? ColumnKind::kIndicator : ColumnKind::kNumeric;
    table.numeric.push_back({spec.header, spec.variable, kind, {}});
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& pr = parsed[order[k]];
    if (!table.empty() && table.station.back() == pr.station && table.date.back() == pr.date) {
      auto& source = table.provenance[owner[order[k]]];
      --source.accepted;
      ++source.rejected;
      source.notes.push_back("duplicate row for (" + pr.station + ", " + pr.date.iso() + ")");
      continue;
    }
    table.add_row(pr.state, pr.city, pr.station, pr.date);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      table.numeric[c].cells.push_back(c < pr.cells.size() ? pr.cells[c] : Cell{});
    }
  }

  if (table.empty()) throw DataError("no rows accepted from input");
  table.validate();
  return table;
}

DataTable read_canonical_csv(const std::filesystem::path& path, const SchemaConfig& schema) {
  SchemaConfig relaxed = schema;
  for (auto& spec : relaxed.numeric) spec.nonnegative = false;
  DataTable table = parse_cpcb_csv({path}, relaxed);
  if (table.provenance.front().rejected > 0) {
    throw DataError(path.string() + ": " + std::to_string(table.provenance.front().rejected) +
                    " rows rejected while reading a canonical table");
  }
  return table;
}

std::string to_csv(const DataTable& table) {
  std::ostringstream out;
  csv::Row header{"State", "City", "Station", "Date"};
  for (const auto& col : table.numeric) header.push_back(col.name);
  csv::write_row(out, header);
  csv::Row row(header.size());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    row[0] = table.state[r];
    row[1] = table.city[r];
    row[2] = table.station[r];
    row[3] = table.date[r].iso();
    for (std::size_t c = 0; c < table.numeric.size(); ++c) {
      const auto& v = table.numeric[c].cells[r];
      row[4 + c] = v ? csv::format_double(*v) : std::string{};
    }
    csv::write_row(out, row);
  }
  return out.str();
}

void write_csv(const DataTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_csv(table);
}

double missing_percent(std::size_t count, std::size_t total) {
  if (total == 0) throw DataError("missing_percent over zero rows");
  // Integer rounding of count * 1000 / total, half away from zero.
  const unsigned long long scaled = (2000ULL * count + total) / (2ULL * total);
  return static_cast<double>(scaled) / 10.0;
}

nlohmann::json MissingnessProfile::to_json() const {
  nlohmann::json doc;
  doc["total_rows"] = total_rows;
  doc["per_column"] = nlohmann::json::array();
  for (const auto& e : per_column) {
    doc["per_column"].push_back(
        {{"column", e.column}, {"missing_count", e.missing_count}, {"missing_percent", e.missing_percent}});
  }
  return doc;
}

MissingnessProfile profile_missing(const DataTable& table) {
  if (table.empty()) throw DataError("cannot profile an empty table");
  MissingnessProfile profile;
  profile.total_rows = table.rows();
  for (const auto& col : table.numeric) {
    const std::size_t missing = col.missing_count();
    if (missing > 0) {
      profile.per_column.push_back({col.name, missing, missing_percent(missing, table.rows())});
    }
  }
  std::stable_sort(profile.per_column.begin(), profile.per_column.end(),
                   [](const MissingEntry& a, const MissingEntry& b) { return a.missing_count > b.missing_count; });
  return profile;
}

std::vector<MonthlyGap> monthly_gap_report(const DataTable& table) {
  if (table.empty()) throw DataError("cannot report gaps on an empty table");
  std::vector<MonthlyGap> out;
  // Rows are sorted by (station, date), so each station-month is a contiguous run.
  std::size_t begin = 0;
  while (begin < table.rows()) {
    std::size_t end = begin + 1;
    while (end < table.rows() && table.station[end] == table.station[begin] &&
           table.date[end].year() == table.date[begin].year() &&
           table.date[end].month() == table.date[begin].month()) {
      ++end;
    }
    for (const auto& col : table.numeric) {
      std::size_t missing = 0;
      for (std::size_t r = begin; r < end; ++r) missing += col.cells[r] ? 0 : 1;
      if (missing > 0) {
        out.push_back({table.station[begin], table.date[begin].year(), table.date[begin].month(), col.name,
                       missing, end - begin, missing == end - begin});
      }
    }
    begin = end;
  }
  return out;
}

void write_gap_report_csv(const std::vector<MonthlyGap>& gaps, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  csv::write_row(out, {"station", "year", "month", "column", "missing_count", "rows_in_month",
                       "month_fully_missing"});
  for (const auto& g : gaps) {
    csv::write_row(out, {g.station, std::to_string(g.year), std::to_string(g.month), g.column,
                         std::to_string(g.missing_count), std::to_string(g.rows_in_month),
                         g.month_fully_missing ? "true" : "false"});
  }
}

}  // namespace aqicast::ingest
