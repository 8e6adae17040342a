// aqicast command-line front end. Every subcommand maps onto one library call
// chain; `run` drives the whole pipeline from a JSON config.

#include <glob.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aqicast/aqi.hpp"
#include "aqicast/csv.hpp"
#include "aqicast/diagnostics.hpp"
#include "aqicast/error.hpp"
#include "aqicast/evaluate.hpp"
#include "aqicast/ingest.hpp"
#include "aqicast/models/model.hpp"
#include "aqicast/parallel.hpp"
#include "aqicast/pipeline.hpp"
#include "aqicast/preprocess.hpp"
#include "aqicast/sarimax.hpp"

namespace fs = std::filesystem;
using namespace aqicast;
using ojson = nlohmann::ordered_json;

namespace {

void write_json(const fs::path& path, const nlohmann::json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

void write_json(const fs::path& path, const ojson& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

/// Inline JSON when the text starts with '{', otherwise a file path.
ojson json_arg(const std::string& text, const std::string& what) {
  try {
    if (!text.empty() && text.front() == '{') return ojson::parse(text);
    std::ifstream in(text);
    if (!in) throw ConfigError("cannot open " + what + " file " + text);
    return ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

Date date_arg(const std::string& text, const std::string& what) {
  const auto d = Date::parse(text);
  if (!d) throw ConfigError(what + ": cannot parse date '" + text + "'");
  return *d;
}

std::vector<std::size_t> orders(const std::string& text, std::size_t count, const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(item, &pos);
      if (pos != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError(what + ": '" + item + "' is not a non-negative integer");
    }
  }
  if (out.size() != count) throw ConfigError(what + " needs " + std::to_string(count) + " comma-separated values");
  return out;
}

ingest::SchemaConfig schema_arg(const std::string& path) {
  return path.empty() ? ingest::SchemaConfig::cpcb_default() : ingest::SchemaConfig::load(path);
}

std::size_t threads_arg(std::size_t flag) { return flag > 0 ? flag : default_threads(); }

std::vector<fs::path> expand_globs(const std::vector<std::string>& patterns) {
  std::vector<fs::path> out;
  for (const auto& p : patterns) {
    if (p.find_first_of("*?[") == std::string::npos) {
      out.emplace_back(p);
      continue;
    }
    glob_t g{};
    const int rc = ::glob(p.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    if (rc == GLOB_NOMATCH) throw ConfigError("no files match '" + p + "'");
    if (rc != 0 && rc != GLOB_NOMATCH) throw ConfigError("cannot expand '" + p + "'");
  }
  return out;
}

void write_series_csv(const diagnostics::Series& s, const fs::path& path, const std::string& column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  csv::write_row(out, {"Date", column});
  for (std::size_t i = 0; i < s.dates.size(); ++i) {
    csv::write_row(out, {s.dates[i].iso(), csv::format_double(s.values[i])});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aqicast: AQI analysis and forecasting toolkit for CPCB station data"};
  app.require_subcommand(1);
  std::function<void()> action;

  // ingest
  std::vector<std::string> in_files;
  std::string schema_path, out_path, report_path, missing_path, gaps_path;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse CPCB CSV exports into the canonical table");
  ingest_cmd->add_option("--in", in_files, "Input CSV files")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--schema", schema_path, "Schema mapping JSON");
  ingest_cmd->add_option("--out", out_path, "Canonical CSV output")->required();
  ingest_cmd->add_option("--report", report_path, "Per-file provenance JSON");
  ingest_cmd->add_option("--missing", missing_path, "Missingness profile JSON");
  ingest_cmd->add_option("--gaps", gaps_path, "Monthly gap report CSV");
  ingest_cmd->callback([&] {
    action = [&] {
      std::vector<fs::path> paths(in_files.begin(), in_files.end());
      const auto table = ingest::parse_cpcb_csv(paths, schema_arg(schema_path));
      ingest::write_csv(table, out_path);
      if (!report_path.empty()) {
        nlohmann::json files = nlohmann::json::array();
        for (const auto& s : table.provenance) {
          files.push_back({{"path", s.path}, {"data_lines", s.data_lines}, {"accepted", s.accepted},
                           {"rejected", s.rejected}, {"notes", s.notes}});
        }
        write_json(report_path, nlohmann::json{{"rows", table.rows()}, {"files", files}});
      }
      if (!missing_path.empty()) write_json(missing_path, ingest::profile_missing(table).to_json());
      if (!gaps_path.empty()) ingest::write_gap_report_csv(ingest::monthly_gap_report(table), gaps_path);
      std::cout << "ingested " << table.rows() << " rows\n";
    };
  });

  // aqi
  std::string in_path, bp_path = std::string(AQICAST_DATA_DIR) + "/cpcb_breakpoints.csv", aqi_mode = "passthrough";
  bool sub_indices = false;
  auto* aqi_cmd = app.add_subcommand("aqi", "Compute CPCB AQI and sub-indices");
  aqi_cmd->add_option("--in", in_path, "Canonical CSV")->required()->check(CLI::ExistingFile);
  aqi_cmd->add_option("--schema", schema_path, "Schema mapping JSON");
  aqi_cmd->add_option("--breakpoints", bp_path, "Breakpoint table CSV")->capture_default_str();
  aqi_cmd->add_option("--mode", aqi_mode, "passthrough or recompute")->capture_default_str()
      ->check(CLI::IsMember({"passthrough", "recompute"}));
  aqi_cmd->add_flag("--sub-indices", sub_indices, "Append SI_<pollutant> columns");
  aqi_cmd->add_option("--out", out_path, "Annotated CSV")->required();
  aqi_cmd->add_option("--report", report_path, "Validity/disagreement report JSON");
  aqi_cmd->callback([&] {
    action = [&] {
      auto table = ingest::read_canonical_csv(in_path, schema_arg(schema_path));
      const auto bp = aqi::BreakpointTable::load(bp_path);
      aqi::AnnotateOptions opts;
      opts.mode = aqi_mode == "recompute" ? aqi::AqiMode::kRecompute : aqi::AqiMode::kPassthrough;
      opts.append_sub_indices = sub_indices;
      const auto report = aqi::annotate_table(table, bp, opts);
      ingest::write_csv(table, out_path);
      if (!report_path.empty()) write_json(report_path, report.to_json());
      std::cout << report.valid << " valid, " << report.invalid << " invalid rows\n";
    };
  });

  // prep
  std::string boundary, train_start, test_end, out_dir;
  std::vector<std::string> drop_list, encode_list;
  double outlier_k = 1.5;
  auto* prep_cmd = app.add_subcommand("prep", "Impute, select, split, encode and scale");
  prep_cmd->add_option("--in", in_path, "Canonical CSV with AQI")->required()->check(CLI::ExistingFile);
  prep_cmd->add_option("--schema", schema_path, "Schema mapping JSON");
  prep_cmd->add_option("--boundary", boundary, "First test date (default 2022-10-01)");
  prep_cmd->add_option("--train-start", train_start, "First training date");
  prep_cmd->add_option("--test-end", test_end, "Last test date");
  prep_cmd->add_option("--drop", drop_list, "Columns to drop")->delimiter(',');
  prep_cmd->add_option("--encode", encode_list, "Key columns to one-hot encode")->delimiter(',');
  prep_cmd->add_option("--outlier-k", outlier_k, "IQR fence multiplier")->capture_default_str();
  prep_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
  prep_cmd->callback([&] {
    action = [&] {
      const auto table = ingest::read_canonical_csv(in_path, schema_arg(schema_path));
      preprocess::PrepConfig cfg;
      if (!boundary.empty()) cfg.boundary = date_arg(boundary, "--boundary");
      if (!train_start.empty()) cfg.train_start = date_arg(train_start, "--train-start");
      if (!test_end.empty()) cfg.test_end = date_arg(test_end, "--test-end");
      if (!drop_list.empty()) cfg.drop = drop_list;
      if (!encode_list.empty()) cfg.encode = encode_list;
      cfg.outlier_k = outlier_k;
      const auto r = preprocess::prepare(table, cfg);
      const fs::path dir(out_dir);
      fs::create_directories(dir);
      ingest::write_csv(r.imputed, dir / "imputed.csv");
      ingest::write_csv(r.train, dir / "train.csv");
      ingest::write_csv(r.test, dir / "test.csv");
      write_json(dir / "imputation.json", r.imputation.to_json());
      write_json(dir / "outliers.json", r.outliers.to_json());
      write_json(dir / "encoding.json", r.encoding.to_json());
      write_json(dir / "scaler.json", r.scaler.to_json());
      write_json(dir / "prep_report.json", nlohmann::json{{"train_rows", r.train.rows()},
                                                          {"test_rows", r.test.rows()},
                                                          {"warnings", r.warnings}});
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "train " << r.train.rows() << " rows, test " << r.test.rows() << " rows\n";
    };
  });

  // eda
  std::string city;
  auto* eda_cmd = app.add_subcommand("eda", "Descriptive statistics, correlations and monthly heat maps");
  eda_cmd->add_option("--in", in_path, "Canonical CSV")->required()->check(CLI::ExistingFile);
  eda_cmd->add_option("--schema", schema_path, "Schema mapping JSON");
  eda_cmd->add_option("--city", city, "Only this city's heat map");
  eda_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
  eda_cmd->callback([&] {
    action = [&] {
      const auto table = ingest::read_canonical_csv(in_path, schema_arg(schema_path));
      const fs::path dir(out_dir);
      fs::create_directories(dir);
      diagnostics::describe(table).write_csv((dir / "describe.csv").string());
      diagnostics::pearson_matrix(table).write_csv((dir / "correlation.csv").string());
      write_json(dir / "missingness.json", ingest::profile_missing(table).to_json());
      std::set<std::string> cities(table.city.begin(), table.city.end());
      if (!city.empty()) cities = {city};
      for (const auto& c : cities) {
        std::string name;
        for (char ch : c) name += std::isalnum(static_cast<unsigned char>(ch)) ? static_cast<char>(std::tolower(ch)) : '_';
        diagnostics::monthly_heatmap(table, diagnostics::HeatmapGroup::kCity, c)
            .write_csv((dir / ("heatmap_" + name + ".csv")).string());
      }
    };
  });

  // ts
  std::string scope = "city", scope_value, column = "AQI", aggregate = "daily";
  std::size_t period = 12, lags = 40;
  int adf_lag = -1;
  auto* ts_cmd = app.add_subcommand("ts", "Decomposition, ADF test and ACF/PACF of one AQI series");
  ts_cmd->add_option("--in", in_path, "Canonical CSV")->required()->check(CLI::ExistingFile);
  ts_cmd->add_option("--schema", schema_path, "Schema mapping JSON");
  ts_cmd->add_option("--scope", scope, "state, city or station")->capture_default_str()->check(CLI::IsMember({"state", "city", "station"}));
  ts_cmd->add_option("--name", scope_value, "State, city or station name")->required();
  ts_cmd->add_option("--column", column, "Column to analyse")->capture_default_str();
  ts_cmd->add_option("--aggregate", aggregate, "daily or monthly")->capture_default_str()->check(CLI::IsMember({"daily", "monthly"}));
  ts_cmd->add_option("--period", period, "Seasonal period for decomposition")->capture_default_str();
  ts_cmd->add_option("--lags", lags, "ACF/PACF lags")->capture_default_str();
  ts_cmd->add_option("--adf-lag", adf_lag, "Fixed ADF lag (default: Schwert rule)");
  ts_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
  ts_cmd->callback([&] {
    action = [&] {
      const auto table = ingest::read_canonical_csv(in_path, schema_arg(schema_path));
      const auto sc = scope == "state"  ? diagnostics::Scope::kState
                      : scope == "city" ? diagnostics::Scope::kCity
                                        : diagnostics::Scope::kStation;
      auto series = diagnostics::daily_series(table, sc, scope_value, column);
      if (aggregate == "monthly") series = diagnostics::monthly_means(series);
      const fs::path dir(out_dir);
      fs::create_directories(dir);
      write_series_csv(series, dir / "series.csv", column);
      const auto adf = diagnostics::adf_test(
          series.values, adf_lag >= 0 ? std::optional<std::size_t>(static_cast<std::size_t>(adf_lag)) : std::nullopt);
      write_json(dir / "adf.json", adf.to_json());
      const std::size_t n = series.values.size();
      const std::size_t k = std::min(lags, n > 2 ? (n - 1) / 2 : 0);
      if (k > 0) {
        const auto a = diagnostics::acf(series.values, k);
        const auto p = diagnostics::pacf(series.values, k);
        std::ofstream out(dir / "acf_pacf.csv", std::ios::binary);
        csv::write_row(out, {"lag", "acf", "pacf"});
        for (std::size_t i = 0; i <= k; ++i) {
          csv::write_row(out, {std::to_string(i), csv::format_double(a[i]), csv::format_double(p[i])});
        }
      }
      if (n >= 2 * period) {
        diagnostics::seasonal_decompose(series.values, period).write_csv((dir / "decomposition.csv").string());
      } else {
        std::cerr << "warning: " << n << " points is fewer than two periods; decomposition skipped\n";
      }
      std::cout << "ADF statistic " << adf.statistic << " (" << (adf.stationary ? "stationary" : "non-stationary")
                << ")\n";
    };
  });

  // fit
  std::string family, params_text, train_path, model_path;
  std::uint64_t seed = 42;
  std::size_t threads = 0;
  auto* fit_cmd = app.add_subcommand("fit", "Train one model");
  fit_cmd->add_option("--model", family, "mean, tree, forest, boost-oblivious, boost-level or svr")->required();
  fit_cmd->add_option("--params", params_text, "Parameters as inline JSON or a JSON file");
  fit_cmd->add_option("--train", train_path, "Training CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--schema", schema_path, "Schema mapping JSON");
  fit_cmd->add_option("--seed", seed, "Seed used when the parameters set none")->capture_default_str();
  fit_cmd->add_option("--threads", threads, "Worker threads (default AQICAST_THREADS)");
  fit_cmd->add_option("--out", model_path, "Model JSON")->required();
  fit_cmd->callback([&] {
    action = [&] {
      const auto fam = models::parse_family(family);
      nlohmann::json params = nlohmann::json::object();
      if (!params_text.empty()) params = nlohmann::json::parse(json_arg(params_text, "--params").dump());
      params = evaluate::with_seed(fam, params, seed);
      const auto table = ingest::read_canonical_csv(train_path, schema_arg(schema_path));
      const auto data = models::training_data(table);
      const auto model = models::fit_model(fam, params, data.frame, data.y, threads_arg(threads));
      models::save_model(model, model_path);
      if (const auto* svr = std::get_if<models::SvrModel>(&model)) {
        for (const auto& w : svr->warnings) std::cerr << "warning: " << w << '\n';
      }
      std::cout << "trained " << family << " on " << data.y.size() << " rows\n";
    };
  });

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Predict AQI with a saved model");
  predict_cmd->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--in", in_path, "Feature CSV")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--schema", schema_path, "Schema mapping JSON");
  predict_cmd->add_option("--out", out_path, "Predictions CSV")->required();
  predict_cmd->callback([&] {
    action = [&] {
      const auto model = models::load_model(model_path);
      const auto table = ingest::read_canonical_csv(in_path, schema_arg(schema_path));
      const auto frame = models::feature_frame(table);
      const auto pred = models::predict(model, frame);
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw DataError("cannot write " + out_path);
      csv::write_row(out, {"Station", "Date", "predicted"});
      for (std::size_t r = 0; r < pred.size(); ++r) {
        csv::write_row(out, {table.station[r], table.date[r].iso(), csv::format_double(pred[r])});
      }
      std::cout << "wrote " << pred.size() << " predictions\n";
    };
  });

  // sarimax
  std::string station, order_text = "1,0,0", seasonal_text = "0,0,0,12", fit_out;
  std::vector<std::string> exog;
  std::size_t horizon = 30;
  bool no_holdout = false;
  auto* sarimax_cmd = app.add_subcommand("sarimax", "Fit SARIMAX to one station's daily AQI and forecast");
  sarimax_cmd->add_option("--in", in_path, "Imputed canonical CSV")->required()->check(CLI::ExistingFile);
  sarimax_cmd->add_option("--schema", schema_path, "Schema mapping JSON");
  sarimax_cmd->add_option("--station", station, "Monitoring station")->required();
  sarimax_cmd->add_option("--order", order_text, "p,d,q")->capture_default_str();
  sarimax_cmd->add_option("--seasonal", seasonal_text, "P,D,Q,m")->capture_default_str();
  sarimax_cmd->add_option("--exog", exog, "Exogenous columns")->delimiter(',');
  sarimax_cmd->add_option("--forecast", horizon, "Forecast horizon in days")->capture_default_str();
  sarimax_cmd->add_flag("--no-holdout", no_holdout, "Forecast past the end instead of scoring a hold-out");
  sarimax_cmd->add_option("--out", out_path, "Forecast CSV")->required();
  sarimax_cmd->add_option("--fit-out", fit_out, "Fitted parameters JSON");
  sarimax_cmd->callback([&] {
    action = [&] {
      const auto o = orders(order_text, 3, "--order");
      const auto s = orders(seasonal_text, 4, "--seasonal");
      sarimax::SarimaSpec spec{o[0], o[1], o[2], s[0], s[1], s[2], s[3], exog};
      const auto table = ingest::read_canonical_csv(in_path, schema_arg(schema_path));
      const auto result = pipeline::forecast_station(table, station, spec, horizon, !no_holdout);
      pipeline::write_forecast_csv(result, out_path);
      if (!fit_out.empty()) write_json(fit_out, result.report);
      std::cout << "fitted " << spec.to_string() << ", objective " << result.fit.objective << '\n';
      if (!result.fit.converged) {
        throw ConvergenceError("Nelder-Mead stopped at its iteration limit; outputs were written", 0.0);
      }
    };
  });

  // gridsearch
  std::string grid_text;
  std::size_t folds = 3;
  auto* grid_cmd = app.add_subcommand("gridsearch", "Expanding-window grid search");
  grid_cmd->add_option("--model", family, "Model family")->required();
  grid_cmd->add_option("--grid", grid_text, "Grid as inline JSON or a JSON file (default: the study's grid)");
  grid_cmd->add_option("--train", train_path, "Training CSV")->required()->check(CLI::ExistingFile);
  grid_cmd->add_option("--schema", schema_path, "Schema mapping JSON");
  grid_cmd->add_option("--folds", folds, "Expanding-window folds")->capture_default_str();
  grid_cmd->add_option("--seed", seed, "Seed used when a combination sets none")->capture_default_str();
  grid_cmd->add_option("--threads", threads, "Worker threads (default AQICAST_THREADS)");
  grid_cmd->add_option("--out", out_path, "Result JSON")->required();
  grid_cmd->callback([&] {
    action = [&] {
      const auto fam = models::parse_family(family);
      const auto grid = evaluate::ParamGrid::from_json(grid_text.empty() ? pipeline::default_grid(fam)
                                                                         : json_arg(grid_text, "--grid"));
      const auto table = ingest::read_canonical_csv(train_path, schema_arg(schema_path));
      evaluate::GridOptions opts;
      opts.folds = folds;
      opts.threads = threads_arg(threads);
      opts.seed = seed;
      const auto result = evaluate::grid_search(fam, grid, table, opts);
      write_json(out_path, result.to_json());
      std::cout << result.entries.size() << " combinations; best " << result.best().params.dump() << " (RMSE "
                << result.best().mean_rmse << ")\n";
    };
  });

  // evaluate
  std::string test_path, predictions_path, name;
  std::size_t bins = 20;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a saved model on a test table");
  eval_cmd->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--test", test_path, "Test CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--schema", schema_path, "Schema mapping JSON");
  eval_cmd->add_option("--report", report_path, "Report JSON")->required();
  eval_cmd->add_option("--predictions", predictions_path, "Per-row predictions CSV");
  eval_cmd->add_option("--name", name, "Name in the performance matrix (default: model file stem)");
  eval_cmd->add_option("--bins", bins, "Residual histogram bins")->capture_default_str();
  eval_cmd->callback([&] {
    action = [&] {
      const auto model = models::load_model(model_path);
      const auto table = ingest::read_canonical_csv(test_path, schema_arg(schema_path));
      const auto ev = evaluate::evaluate_model(model, table, "AQI", bins);
      nlohmann::json doc = ev.to_json();
      doc["model"] = name.empty() ? fs::path(model_path).stem().string() : name;
      doc["family"] = models::family_name(models::family_of(model));
      write_json(report_path, doc);
      if (!predictions_path.empty()) evaluate::write_predictions_csv(ev.predictions, predictions_path);
      std::cout << ev.metrics.to_json().dump() << '\n';
    };
  });

  // compare
  std::vector<std::string> report_globs;
  std::string json_out;
  auto* compare_cmd = app.add_subcommand("compare", "Build the performance matrix from evaluation reports");
  compare_cmd->add_option("--reports", report_globs, "Report JSON files or glob patterns")->required();
  compare_cmd->add_option("--out", out_path, "Matrix CSV")->required();
  compare_cmd->add_option("--json", json_out, "Matrix JSON");
  compare_cmd->callback([&] {
    action = [&] {
      std::vector<std::pair<std::string, evaluate::MetricsReport>> entries;
      for (const auto& p : expand_globs(report_globs)) {
        std::ifstream in(p);
        if (!in) throw ConfigError("cannot open report " + p.string());
        const auto doc = nlohmann::json::parse(in);
        entries.emplace_back(doc.value("model", p.stem().string()), evaluate::MetricsReport::from_json(doc.at("metrics")));
      }
      const auto matrix = evaluate::compare_models(entries);
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw DataError("cannot write " + out_path);
      out << matrix.to_csv();
      if (!json_out.empty()) write_json(json_out, matrix.to_json());
      std::cout << matrix.to_csv();
    };
  });

  // run
  std::string config_path, from_stage, boundary_flag;
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::size_t> folds_flag;
  auto* run_cmd = app.add_subcommand("run", "Run the whole pipeline from a JSON config");
  run_cmd->add_option("--config", config_path, "Run config JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--from", from_stage, "Resume at this stage using the existing manifest");
  run_cmd->add_option("--threads", threads, "Worker threads (overrides config and AQICAST_THREADS)");
  run_cmd->add_option("--seed", seed_flag, "Override the config seed");
  run_cmd->add_option("--folds", folds_flag, "Override the fold count");
  run_cmd->add_option("--boundary", boundary_flag, "Override the split boundary");
  run_cmd->add_option("--out-dir", out_dir, "Override the output directory");
  run_cmd->callback([&] {
    action = [&] {
      auto config = pipeline::RunConfig::load(config_path);
      if (threads > 0) config.threads = threads;
      if (seed_flag) config.seed = *seed_flag;
      if (folds_flag) config.folds = *folds_flag;
      if (!boundary_flag.empty()) config.prep.boundary = date_arg(boundary_flag, "--boundary");
      if (!out_dir.empty()) config.output_dir = out_dir;
      pipeline::RunOptions opts;
      if (!from_stage.empty()) opts.resume_from = from_stage;
      const auto result = pipeline::run_pipeline(config, opts);
      std::cout << result.manifest.artifact_count() << " artifacts; manifest at "
                << (config.output_dir / "manifest.json").string() << '\n';
      if (result.status != ExitCode::kOk) {
        if (result.status == ExitCode::kConvergence) throw ConvergenceError(result.message, 0.0);
        throw Error(result.status, result.message);
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kConfig);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kFailure);
  }
}
