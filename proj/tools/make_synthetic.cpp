// Regenerates data/synthetic_cpcb.csv, the bundled offline fixture.

#include <iostream>

#include <CLI11.hpp>

#include "aqicast/aqi.hpp"
#include "aqicast/error.hpp"
#include "aqicast/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic CPCB export"};
  std::string out = std::string(AQICAST_DATA_DIR) + "/synthetic_cpcb.csv";
  std::string bp = std::string(AQICAST_DATA_DIR) + "/cpcb_breakpoints.csv";
  aqicast::synthetic::Options opts;
  app.add_option("--out", out, "Output CSV")->capture_default_str();
  app.add_option("--breakpoints", bp, "Breakpoint table")->capture_default_str();
  app.add_option("--days", opts.days, "Days per station")->capture_default_str();
  app.add_option("--seed", opts.seed, "Seed")->capture_default_str();
  app.add_option("--noise", opts.noise_sd, "AQI noise standard deviation")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  try {
    const auto table = aqicast::synthetic::generate(aqicast::aqi::BreakpointTable::load(bp), opts);
    aqicast::synthetic::write_cpcb_export(table, out);
    std::cout << "wrote " << table.rows() << " rows to " << out << '\n';
  } catch (const aqicast::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  }
  return 0;
}
