#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aqicast/aqi.hpp"
#include "aqicast/error.hpp"
#include "aqicast/models/model.hpp"
#include "aqicast/preprocess.hpp"
#include "aqicast/sarimax.hpp"

namespace aqicast::pipeline {

struct ModelSpec {
  std::string name;
  models::Family family = models::Family::kMean;
  /// Axis name -> list of values, in declared order. Absent means default_grid.
  std::optional<nlohmann::ordered_json> grid;
};

/// Grids used when a model entry gives none: the booster and forest grids of the
/// study, C=100/epsilon=0.1 for the SVR, nothing for the mean baseline.
nlohmann::ordered_json default_grid(models::Family family);

struct DiagnosticsSpec {
  /// City whose AQI series feeds the time-series diagnostics; default is the
  /// city with the highest mean AQI.
  std::optional<std::string> city;
  std::size_t period = 12;
  std::size_t acf_lags = 40;
};

struct SarimaxStageSpec {
  std::string station;
  sarimax::SarimaSpec spec;
  /// Trailing days held out and forecast.
  std::size_t horizon = 30;
};

struct RunConfig {
  std::vector<std::filesystem::path> inputs;
  std::optional<std::filesystem::path> schema;
  std::filesystem::path breakpoints;
  aqi::AqiMode aqi_mode = aqi::AqiMode::kPassthrough;
  preprocess::PrepConfig prep;
  std::size_t folds = 3;
  std::uint64_t seed = 42;
  std::optional<std::size_t> threads;
  std::filesystem::path output_dir;
  DiagnosticsSpec diagnostics;
  std::vector<ModelSpec> models;
  std::optional<SarimaxStageSpec> sarimax;

  /// Relative paths resolve against base_dir. Unknown keys are errors.
  static RunConfig from_json(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;

  /// Checks referenced files exist and model names are unique and path-safe.
  void validate() const;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct Artifact {
  /// Relative to the output directory.
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct StageRecord {
  std::string name;
  std::vector<std::string> inputs;
  std::vector<Artifact> outputs;
  std::string status;
  std::string error;
};

struct Manifest {
  std::string config_sha256;
  std::vector<StageRecord> stages;
  bool completed = false;

  std::size_t artifact_count() const;
  const StageRecord* stage(const std::string& name) const;
  nlohmann::ordered_json to_json() const;
  static Manifest from_json(const nlohmann::json& doc);
  static Manifest load(const std::filesystem::path& path);
};

/// Stage names in execution order. "sarimax" runs only when configured.
const std::vector<std::string>& stage_names();

struct RunOptions {
  /// Reuse the manifest records of earlier stages and start here. Stages only
  /// read the files named as their inputs, so anything else may be deleted.
  std::optional<std::string> resume_from;
};

struct RunResult {
  ExitCode status = ExitCode::kOk;
  std::string message;
  Manifest manifest;
};

struct StationForecast {
  sarimax::SarimaFit fit;
  /// Dates of the forecast steps.
  std::vector<Date> dates;
  /// Held-out actuals, empty when forecasting past the end of the data.
  std::vector<double> actual;
  sarimax::Forecast forecast;
  nlohmann::ordered_json report;
};

/// Fits a SARIMAX model to one station's daily AQI (exogenous columns from the
/// same station) and forecasts `horizon` days. With holdout the last `horizon`
/// days are withheld from the fit and scored; exogenous models require it,
/// since future regressor values are otherwise unknown.
StationForecast forecast_station(const DataTable& table, const std::string& station, const sarimax::SarimaSpec& spec,
                                 std::size_t horizon, bool holdout, const sarimax::FitOptions& options = {});

void write_forecast_csv(const StationForecast& result, const std::filesystem::path& path);

/// Runs ingest -> aqi -> prep -> eda -> models -> compare (-> sarimax), writing
/// every artifact and `manifest.json` under config.output_dir. Never throws for
/// stage failures; they are reported through the status and the manifest.
RunResult run_pipeline(const RunConfig& config, const RunOptions& options = {});

}  // namespace aqicast::pipeline
