#include "aqicast/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "aqicast/csv.hpp"
#include "aqicast/error.hpp"
#include "aqicast/random.hpp"

namespace aqicast::synthetic {
namespace {

struct StationSpec {
  const char* state;
  const char* city;
  const char* station;
  double level;
  double amplitude;
};

constexpr StationSpec kStations[] = {
    {"Delhi", "Delhi", "Anand Vihar, Delhi - DPCC", 2.2, 0.65},
    {"Delhi", "Delhi", "ITO, Delhi - CPCB", 1.9, 0.6},
    {"Maharashtra", "Mumbai", "Bandra, Mumbai - MPCB", 1.0, 0.35},
    {"Karnataka", "Bengaluru", "BTM Layout, Bengaluru - CPCB", 0.7, 0.25},
    {"Andhra Pradesh", "Visakhapatnam", "GVM Corporation, Visakhapatnam - APPCB", 0.9, 0.3},
};

struct ColumnSpec {
  const char* header;
  const char* variable;
};

constexpr ColumnSpec kColumns[] = {
    {"PM2.5 (ug/m3)", "PM2.5"},     {"PM10 (ug/m3)", "PM10"},       {"NO (ug/m3)", "NO"},
    {"NO2 (ug/m3)", "NO2"},         {"NOx (ppb)", "NOx"},           {"NH3 (ug/m3)", "NH3"},
    {"SO2 (ug/m3)", "SO2"},         {"CO (mg/m3)", "CO"},           {"Ozone (ug/m3)", "O3"},
    {"Benzene (ug/m3)", "Benzene"}, {"Toluene (ug/m3)", "Toluene"}, {"Xylene (ug/m3)", "Xylene"},
    {"Temp (degree C)", "Temp"},    {"RH (%)", "RH"},               {"WS (m/s)", "WS"},
    {"WD (deg)", "WD"},             {"SR (W/mt2)", "SR"},           {"Air_Quality_Index", "AQI"},
};
constexpr std::size_t kColumnCount = std::size(kColumns);
constexpr std::size_t kAqi = kColumnCount - 1;

constexpr const char* kTruthPollutants[] = {"PM2.5", "PM10", "NO2", "SO2", "CO", "NH3"};

double round2(double v) { return std::round(v * 100.0) / 100.0; }

double missing_rate(std::string_view variable) {
  if (variable == "Temp") return 0.8;
  if (variable == "RH") return 0.2;
  if (variable == "AQI") return 0.01;
  if (variable == "NOx") return 0.03;
  return 0.02;
}

}  // namespace

DataTable generate(const aqi::BreakpointTable& breakpoints, const Options& options) {
  if (options.days == 0) throw ConfigError("synthetic data needs at least one day");
  for (const char* p : kTruthPollutants) {
    if (!breakpoints.contains(p)) throw ConfigError(std::string("breakpoint table lacks ") + p);
  }
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  DataTable table;
  for (const auto& c : kColumns) table.numeric.push_back({c.header, c.variable, ColumnKind::kNumeric, {}});

  for (std::size_t s = 0; s < std::size(kStations); ++s) {
    const auto& st = kStations[s];
    Rng rng = Rng::substream(options.seed, "synthetic", s);
    Rng holes = Rng::substream(options.seed, "synthetic-missing", s);
    double z = 0.0;
    for (std::size_t d = 0; d < options.days; ++d) {
      const Date day = Date::from_days(options.start.days_since_epoch() + static_cast<long>(d));
      const double doy = static_cast<double>(day.days_since_epoch() - Date(day.year(), 1, 1).days_since_epoch());
      // Peaks around early December, troughs in monsoon.
      const double season = 1.0 + st.amplitude * std::cos(kTwoPi * (doy - 340.0) / 365.25);
      z = 0.7 * z + 0.45 * rng.normal();
      const double shock = std::exp(0.35 * z);
      auto lognormal = [&](double sd) { return std::exp(sd * rng.normal()); };

      std::array<double, kColumnCount> v{};
      v[0] = 45.0 * st.level * season * shock * lognormal(0.15);
      v[1] = v[0] * (1.6 + 0.3 * rng.uniform()) + 20.0 * lognormal(0.2);
      v[2] = 12.0 * st.level * shock * lognormal(0.3);
      v[3] = 30.0 * st.level * std::sqrt(season) * shock * lognormal(0.25);
      v[4] = v[2] + 0.5 * v[3] + 5.0 * lognormal(0.2);
      v[5] = 25.0 * st.level * lognormal(0.3);
      v[6] = 12.0 * std::sqrt(st.level) * lognormal(0.35);
      v[7] = 0.9 * st.level * season * shock * lognormal(0.25);
      v[8] = 35.0 * lognormal(0.3);
      v[9] = 2.0 * st.level * lognormal(0.4);
      v[10] = 8.0 * st.level * lognormal(0.4);
      v[11] = 1.5 * st.level * lognormal(0.4);
      v[12] = 25.0 - 8.0 * std::cos(kTwoPi * (doy - 15.0) / 365.25) + 2.0 * rng.normal();
      v[13] = std::clamp(60.0 + 20.0 * std::sin(kTwoPi * (doy - 100.0) / 365.25) + 8.0 * rng.normal(), 5.0, 100.0);
      v[14] = 1.5 * lognormal(0.4);
      v[15] = 360.0 * rng.uniform();
      v[16] = std::max(0.0, 150.0 + 80.0 * std::sin(kTwoPi * (doy - 80.0) / 365.25) + 20.0 * rng.normal());

      double truth = 0.0;
      for (std::size_t c = 0; c < kAqi; ++c) {
        for (const char* p : kTruthPollutants) {
          if (kColumns[c].variable == std::string_view(p)) {
            truth = std::max(truth, aqi::sub_index(p, v[c], breakpoints));
          }
        }
      }
      v[kAqi] = std::max(0.0, truth + options.noise_sd * rng.normal());

      table.add_row(st.state, st.city, st.station, day);
      for (std::size_t c = 0; c < kColumnCount; ++c) {
        Cell cell = round2(v[c]);
        if (options.inject_missing) {
          const std::string_view var = kColumns[c].variable;
          if (holes.uniform() < missing_rate(var)) cell.reset();
          // A month-long NH3 outage at the Mumbai station.
          if (var == "NH3" && s == 2 && day.year() == 2021 && day.month() == 3) cell.reset();
          // Occasional negative readings, a known sensor fault in CPCB exports.
          if (var == "SO2" && cell && holes.uniform() < 0.002) cell = -*cell;
        }
        table.numeric[c].cells.push_back(cell);
      }
    }
  }
  table.sort_rows();
  table.validate();
  return table;
}

void write_cpcb_export(const DataTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  csv::Row header{"State", "City", "Monitoring Station", "Date"};
  for (const auto& col : table.numeric) header.push_back(col.name);
  csv::write_row(out, header);
  csv::Row row(header.size());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    char date[16];
    std::snprintf(date, sizeof date, "%02u-%02u-%04d", table.date[r].day(), table.date[r].month(),
                  table.date[r].year());
    row[0] = table.state[r];
    row[1] = table.city[r];
    row[2] = table.station[r];
    row[3] = date;
    for (std::size_t c = 0; c < table.numeric.size(); ++c) {
      const auto& v = table.numeric[c].cells[r];
      row[4 + c] = v ? csv::format_double(*v) : "NA";
    }
    csv::write_row(out, row);
  }
}

}  // namespace aqicast::synthetic
