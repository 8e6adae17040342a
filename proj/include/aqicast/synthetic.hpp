#pragma once

#include <cstdint>
#include <filesystem>

#include "aqicast/aqi.hpp"
#include "aqicast/date.hpp"
#include "aqicast/table.hpp"

namespace aqicast::synthetic {

struct Options {
  std::size_t days = 1000;
  Date start{2020, 6, 1};
  std::uint64_t seed = 42;
  /// Standard deviation of the noise added to the true AQI.
  double noise_sd = 5.0;
  bool inject_missing = true;
};

/// CPCB-shaped station-day table for five stations in four cities. Columns use
/// the CPCB export headers; the AQI column is the maximum CPCB sub-index over
/// PM2.5, PM10, NO2, SO2, CO and NH3, plus Gaussian noise.
///
/// With inject_missing: Temp ~80% and RH ~20% missing, other readings ~2%,
/// AQI ~1%, one station-month of NH3 fully missing, and a few negative SO2
/// readings (sensor faults).
DataTable generate(const aqi::BreakpointTable& breakpoints, const Options& options = {});

/// Writes the table as a CPCB dashboard export ("Monitoring Station", DD-MM-YYYY dates).
void write_cpcb_export(const DataTable& table, const std::filesystem::path& path);

}  // namespace aqicast::synthetic
