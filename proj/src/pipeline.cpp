#include "aqicast/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "aqicast/csv.hpp"
#include "aqicast/diagnostics.hpp"
#include "aqicast/evaluate.hpp"
#include "aqicast/ingest.hpp"
#include "aqicast/json_util.hpp"
#include "aqicast/parallel.hpp"

namespace aqicast::pipeline {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

const std::set<std::string> kConfigKeys{"inputs",    "schema", "breakpoints", "aqi_mode",   "drop",
                                        "encode",    "split",  "outlier_k",   "folds",      "seed",
                                        "threads",   "output_dir", "diagnostics", "models", "sarimax"};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

Date parse_date(const ojson& v, const std::string& what) {
  if (!v.is_string()) throw ConfigError(what + " must be a date string");
  const auto d = Date::parse(v.get<std::string>());
  if (!d) throw ConfigError(what + ": cannot parse date '" + v.get<std::string>() + "'");
  return *d;
}

std::vector<std::size_t> size_list(const ojson& v, std::size_t count, const std::string& what) {
  if (!v.is_array() || v.size() != count) {
    throw ConfigError(what + " must be a list of " + std::to_string(count) + " non-negative integers");
  }
  std::vector<std::size_t> out;
  for (const auto& x : v) {
    if (!x.is_number_unsigned()) throw ConfigError(what + " must hold non-negative integers");
    out.push_back(x.get<std::size_t>());
  }
  return out;
}

std::string slug(const std::string& text) {
  std::string out;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    out += std::isalnum(u) ? static_cast<char>(std::tolower(u)) : '_';
  }
  return out;
}

void write_json(const fs::path& path, const ojson& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

ojson read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

ojson to_ordered(const nlohmann::json& doc) { return ojson::parse(doc.dump()); }

std::string aqi_mode_name(aqi::AqiMode mode) {
  return mode == aqi::AqiMode::kPassthrough ? "passthrough" : "recompute";
}

/// Collects a stage's inputs and outputs; outputs are hashed once the stage is done.
class StageContext {
 public:
  StageContext(const fs::path& out_dir, StageRecord& record) : out_dir_(out_dir), record_(record) {}

  fs::path input(const std::string& rel) {
    record_.inputs.push_back(rel);
    return out_dir_ / rel;
  }
  void external_input(const fs::path& path) { record_.inputs.push_back(path.string()); }

  fs::path output(const std::string& rel) {
    const fs::path path = out_dir_ / rel;
    fs::create_directories(path.parent_path());
    pending_.push_back(rel);
    return path;
  }

  void seal() {
    for (const auto& rel : pending_) {
      const fs::path path = out_dir_ / rel;
      if (!fs::exists(path)) continue;
      record_.outputs.push_back({rel, sha256_file(path), fs::file_size(path)});
    }
    pending_.clear();
  }

 private:
  fs::path out_dir_;
  StageRecord& record_;
  std::vector<std::string> pending_;
};

ingest::SchemaConfig load_schema(const RunConfig& config, StageContext& ctx) {
  if (!config.schema) return ingest::SchemaConfig::cpcb_default();
  ctx.external_input(*config.schema);
  return ingest::SchemaConfig::load(*config.schema);
}

void stage_ingest(const RunConfig& config, StageContext& ctx) {
  const auto schema = load_schema(config, ctx);
  for (const auto& p : config.inputs) ctx.external_input(p);
  const DataTable table = ingest::parse_cpcb_csv(config.inputs, schema);
  ingest::write_csv(table, ctx.output("01_ingest/table.csv"));

  ojson files = ojson::array();
  for (const auto& src : table.provenance) {
    files.push_back({{"path", src.path},
                     {"data_lines", src.data_lines},
                     {"accepted", src.accepted},
                     {"rejected", src.rejected},
                     {"notes", src.notes}});
  }
  ojson report;
  report["rows"] = table.rows();
  report["columns"] = table.numeric.size() + 4;
  report["files"] = std::move(files);
  write_json(ctx.output("01_ingest/ingest_report.json"), report);
  write_json(ctx.output("01_ingest/missingness.json"), to_ordered(ingest::profile_missing(table).to_json()));
  ingest::write_gap_report_csv(ingest::monthly_gap_report(table), ctx.output("01_ingest/monthly_gaps.csv"));
}

void stage_aqi(const RunConfig& config, StageContext& ctx) {
  const auto schema = load_schema(config, ctx);
  DataTable table = ingest::read_canonical_csv(ctx.input("01_ingest/table.csv"), schema);
  ctx.external_input(config.breakpoints);
  const auto bp = aqi::BreakpointTable::load(config.breakpoints);
  aqi::AnnotateOptions opts;
  opts.mode = config.aqi_mode;
  const auto report = aqi::annotate_table(table, bp, opts);
  ingest::write_csv(table, ctx.output("02_aqi/table.csv"));
  ojson doc;
  doc["mode"] = aqi_mode_name(config.aqi_mode);
  doc["report"] = to_ordered(report.to_json());
  write_json(ctx.output("02_aqi/aqi_report.json"), doc);
}

void stage_prep(const RunConfig& config, StageContext& ctx) {
  const auto schema = load_schema(config, ctx);
  const DataTable table = ingest::read_canonical_csv(ctx.input("02_aqi/table.csv"), schema);
  const auto result = preprocess::prepare(table, config.prep);
  ingest::write_csv(result.imputed, ctx.output("03_prep/imputed.csv"));
  ingest::write_csv(result.train, ctx.output("03_prep/train.csv"));
  ingest::write_csv(result.test, ctx.output("03_prep/test.csv"));
  write_json(ctx.output("03_prep/imputation.json"), to_ordered(result.imputation.to_json()));
  write_json(ctx.output("03_prep/outliers.json"), to_ordered(result.outliers.to_json()));
  write_json(ctx.output("03_prep/encoding.json"), to_ordered(result.encoding.to_json()));
  write_json(ctx.output("03_prep/scaler.json"), to_ordered(result.scaler.to_json()));

  auto date_range = [](const DataTable& t) {
    const auto [lo, hi] = std::minmax_element(t.date.begin(), t.date.end());
    return ojson{{"first", lo->iso()}, {"last", hi->iso()}, {"rows", t.rows()}};
  };
  ojson report;
  report["train"] = date_range(result.train);
  report["test"] = date_range(result.test);
  report["boundary"] = config.prep.boundary.iso();
  report["mean_filled"] = result.imputation.total_mean_filled();
  report["zero_filled"] = result.imputation.total_zero_filled();
  report["warnings"] = result.warnings;
  write_json(ctx.output("03_prep/prep_report.json"), report);
}

std::string highest_mean_city(const DataTable& table) {
  const NumericColumn& aqi = table.at(preprocess::kTarget);
  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (!aqi.cells[r]) continue;
    auto& [s, n] = sums[table.city[r]];
    s += *aqi.cells[r];
    ++n;
  }
  if (sums.empty()) throw DataError("no AQI values to rank cities by");
  std::string best;
  double best_mean = -std::numeric_limits<double>::infinity();
  for (const auto& [city, sn] : sums) {
    const double m = sn.first / static_cast<double>(sn.second);
    if (m > best_mean) {
      best_mean = m;
      best = city;
    }
  }
  return best;
}

void stage_eda(const RunConfig& config, StageContext& ctx) {
  const auto schema = load_schema(config, ctx);
  const DataTable table = ingest::read_canonical_csv(ctx.input("03_prep/imputed.csv"), schema);
  ojson report;

  diagnostics::describe(table).write_csv(ctx.output("04_eda/describe.csv").string());
  const auto corr = diagnostics::pearson_matrix(table);
  corr.write_csv(ctx.output("04_eda/correlation.csv").string());
  const NumericColumn& target = table.at(preprocess::kTarget);
  const auto t_it = std::find(corr.columns.begin(), corr.columns.end(), target.name);
  if (t_it != corr.columns.end()) {
    const auto ti = static_cast<std::size_t>(t_it - corr.columns.begin());
    ojson row = ojson::object();
    std::string top;
    double top_r = -2.0;
    for (std::size_t j = 0; j < corr.columns.size(); ++j) {
      if (j == ti) continue;
      const auto r = corr.at(ti, j);
      const std::string var = table.at(corr.columns[j]).variable;
      row[var] = r ? ojson(*r) : ojson(nullptr);
      if (r && *r > top_r) {
        top_r = *r;
        top = var;
      }
    }
    report["aqi_correlations"] = std::move(row);
    report["most_correlated"] = top;
  }

  std::set<std::string> cities(table.city.begin(), table.city.end());
  ojson peaks = ojson::object();
  for (const auto& city : cities) {
    const auto hm = diagnostics::monthly_heatmap(table, diagnostics::HeatmapGroup::kCity, city);
    hm.write_csv(ctx.output("04_eda/heatmap_" + slug(city) + ".csv").string());
    // Month with the highest mean across years.
    std::array<std::pair<double, std::size_t>, 12> acc{};
    for (const auto& row : hm.cells) {
      for (std::size_t m = 0; m < 12; ++m) {
        if (row[m]) {
          acc[m].first += *row[m];
          ++acc[m].second;
        }
      }
    }
    int peak = 0;
    double peak_v = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < 12; ++m) {
      if (acc[m].second == 0) continue;
      const double v = acc[m].first / static_cast<double>(acc[m].second);
      if (v > peak_v) {
        peak_v = v;
        peak = static_cast<int>(m) + 1;
      }
    }
    peaks[city] = peak;
  }
  report["heatmap_peak_month"] = std::move(peaks);

  const std::string city = config.diagnostics.city.value_or(highest_mean_city(table));
  report["series_city"] = city;
  const auto series = diagnostics::daily_series(table, diagnostics::Scope::kCity, city);
  {
    std::ofstream out(ctx.output("04_eda/series.csv"), std::ios::binary);
    csv::write_row(out, {"Date", "AQI"});
    for (std::size_t i = 0; i < series.dates.size(); ++i) {
      csv::write_row(out, {series.dates[i].iso(), csv::format_double(series.values[i])});
    }
  }
  report["series_days"] = series.values.size();
  report["series_interpolated"] = series.interpolated;

  const auto adf = diagnostics::adf_test(series.values);
  write_json(ctx.output("04_eda/adf.json"), to_ordered(adf.to_json()));
  report["adf_stationary"] = adf.stationary;

  const std::size_t n = series.values.size();
  const std::size_t lags = std::min(config.diagnostics.acf_lags, n > 2 ? (n - 1) / 2 : 0);
  if (lags > 0) {
    const auto a = diagnostics::acf(series.values, lags);
    const auto p = diagnostics::pacf(series.values, lags);
    std::ofstream out(ctx.output("04_eda/acf_pacf.csv"), std::ios::binary);
    csv::write_row(out, {"lag", "acf", "pacf"});
    for (std::size_t k = 0; k <= lags; ++k) {
      csv::write_row(out, {std::to_string(k), csv::format_double(a[k]), csv::format_double(p[k])});
    }
  }

  const auto monthly = diagnostics::monthly_means(series);
  const std::size_t period = config.diagnostics.period;
  if (monthly.values.size() >= 2 * period) {
    diagnostics::seasonal_decompose(monthly.values, period).write_csv(ctx.output("04_eda/decomposition.csv").string());
    report["decomposition"] = "monthly means, period " + std::to_string(period);
  } else {
    report["decomposition"] = "skipped: " + std::to_string(monthly.values.size()) + " months is fewer than two periods";
  }
  write_json(ctx.output("04_eda/eda_report.json"), report);
}

std::vector<ModelSpec> effective_models(const RunConfig& config) {
  std::vector<ModelSpec> out = config.models;
  const bool has_mean = std::any_of(out.begin(), out.end(),
                                    [](const ModelSpec& m) { return m.family == models::Family::kMean; });
  if (!has_mean) out.push_back({"mean", models::Family::kMean, std::nullopt});
  return out;
}

void stage_models(const RunConfig& config, StageContext& ctx) {
  const auto schema = load_schema(config, ctx);
  const DataTable train = ingest::read_canonical_csv(ctx.input("03_prep/train.csv"), schema);
  const DataTable test = ingest::read_canonical_csv(ctx.input("03_prep/test.csv"), schema);
  const std::size_t threads = config.threads.value_or(default_threads());
  const auto data = models::training_data(train, preprocess::kTarget);

  for (const auto& spec : effective_models(config)) {
    const std::string dir = "05_models/" + spec.name + "/";
    const auto grid = evaluate::ParamGrid::from_json(spec.grid.value_or(default_grid(spec.family)));
    evaluate::GridOptions gopts;
    gopts.folds = config.folds;
    gopts.threads = threads;
    gopts.seed = config.seed;
    const auto search = evaluate::grid_search(spec.family, grid, train, gopts);
    write_json(ctx.output(dir + "grid.json"), search.to_json());
    if (!std::isfinite(search.best().mean_rmse)) {
      throw ConfigError("model '" + spec.name + "': every grid combination failed; first error: " +
                        search.entries.front().error);
    }
    const auto model = models::fit_model(spec.family, search.best().params, data.frame, data.y, threads);
    models::save_model(model, ctx.output(dir + "model.json"));
    const auto ev = evaluate::evaluate_model(model, test, preprocess::kTarget);
    evaluate::write_predictions_csv(ev.predictions, ctx.output(dir + "predictions.csv"));

    ojson report;
    report["model"] = spec.name;
    report["family"] = models::family_name(spec.family);
    report["params"] = to_ordered(search.best().params);
    report["train_rows"] = data.y.size();
    report["evaluation"] = to_ordered(ev.to_json());
    report["metrics"] = to_ordered(ev.metrics.to_json());
    if (const auto* svr = std::get_if<models::SvrModel>(&model)) report["warnings"] = svr->warnings;
    write_json(ctx.output(dir + "report.json"), report);
  }
}

void stage_compare(const RunConfig& config, StageContext& ctx) {
  std::vector<std::pair<std::string, evaluate::MetricsReport>> entries;
  for (const auto& spec : effective_models(config)) {
    const auto doc = read_json(ctx.input("05_models/" + spec.name + "/report.json"));
    entries.emplace_back(doc.at("model").get<std::string>(),
                         evaluate::MetricsReport::from_json(nlohmann::json::parse(doc.at("metrics").dump())));
  }
  const auto matrix = evaluate::compare_models(entries);
  {
    std::ofstream out(ctx.output("06_compare/performance_matrix.csv"), std::ios::binary);
    out << matrix.to_csv();
  }
  write_json(ctx.output("06_compare/performance_matrix.json"), to_ordered(matrix.to_json()));
}

void stage_sarimax(const RunConfig& config, StageContext& ctx) {
  const auto schema = load_schema(config, ctx);
  const DataTable table = ingest::read_canonical_csv(ctx.input("03_prep/imputed.csv"), schema);
  const auto& s = *config.sarimax;
  const auto result = forecast_station(table, s.station, s.spec, s.horizon, true);
  write_json(ctx.output("07_sarimax/fit.json"), result.report);
  write_forecast_csv(result, ctx.output("07_sarimax/forecast.csv"));
}

using StageFn = void (*)(const RunConfig&, StageContext&);

const std::vector<std::pair<std::string, StageFn>>& stage_table() {
  static const std::vector<std::pair<std::string, StageFn>> table{
      {"ingest", stage_ingest}, {"aqi", stage_aqi},         {"prep", stage_prep},       {"eda", stage_eda},
      {"models", stage_models}, {"compare", stage_compare}, {"sarimax", stage_sarimax},
  };
  return table;
}

}  // namespace

ojson default_grid(models::Family family) {
  using models::Family;
  switch (family) {
    case Family::kBoostOblivious:
    case Family::kBoostLevel:
      return ojson::parse(R"({"depth": [3, 6, 8], "learning_rate": [0.01, 0.05, 0.1],
                              "iterations": [100, 300, 500], "loss_function": ["RMSE"], "random_seed": [42]})");
    case Family::kForest:
      return ojson::parse(R"({"n_estimators": [100, 200, 500], "max_depth": [3, 6, 8],
                              "max_features": ["auto", "sqrt", "log2"], "random_state": [42]})");
    case Family::kSvr:
      return ojson::parse(R"({"C": [100], "epsilon": [0.1]})");
    case Family::kTree:
    case Family::kMean:
      return ojson::object();
  }
  return ojson::object();
}

RunConfig RunConfig::from_json(const ojson& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kConfigKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  RunConfig c;
  try {
    if (!doc.contains("inputs") || !doc.at("inputs").is_array() || doc.at("inputs").empty()) {
      throw ConfigError("config needs a non-empty 'inputs' list");
    }
    for (const auto& p : doc.at("inputs")) c.inputs.push_back(resolve(base_dir, p.get<std::string>()));
    if (doc.contains("schema") && !doc.at("schema").is_null()) {
      c.schema = resolve(base_dir, doc.at("schema").get<std::string>());
    }
    c.breakpoints = doc.contains("breakpoints") ? resolve(base_dir, doc.at("breakpoints").get<std::string>())
                                                : fs::path(AQICAST_DATA_DIR) / "cpcb_breakpoints.csv";
    const std::string mode = doc.value("aqi_mode", std::string("passthrough"));
    if (mode == "passthrough") {
      c.aqi_mode = aqi::AqiMode::kPassthrough;
    } else if (mode == "recompute") {
      c.aqi_mode = aqi::AqiMode::kRecompute;
    } else {
      throw ConfigError("aqi_mode must be passthrough or recompute, not '" + mode + "'");
    }
    if (doc.contains("drop")) c.prep.drop = doc.at("drop").get<std::vector<std::string>>();
    if (doc.contains("encode")) c.prep.encode = doc.at("encode").get<std::vector<std::string>>();
    if (doc.contains("split")) {
      const auto& sp = doc.at("split");
      for (const auto& [key, value] : sp.items()) {
        if (key != "train_start" && key != "boundary" && key != "test_end") {
          throw ConfigError("unknown split key '" + key + "'");
        }
      }
      if (sp.contains("train_start") && !sp.at("train_start").is_null()) {
        c.prep.train_start = parse_date(sp.at("train_start"), "split.train_start");
      }
      if (sp.contains("boundary")) c.prep.boundary = parse_date(sp.at("boundary"), "split.boundary");
      if (sp.contains("test_end") && !sp.at("test_end").is_null()) {
        c.prep.test_end = parse_date(sp.at("test_end"), "split.test_end");
      }
    }
    c.prep.outlier_k = doc.value("outlier_k", 1.5);
    c.folds = doc.contains("folds") ? json_count(doc.at("folds"), "folds") : 3;
    if (c.folds < 1) throw ConfigError("folds must be at least 1");
    c.seed = doc.contains("seed") ? json_count(doc.at("seed"), "seed") : 42;
    if (doc.contains("threads") && !doc.at("threads").is_null()) c.threads = json_count(doc.at("threads"), "threads");
    c.output_dir = resolve(base_dir, doc.value("output_dir", std::string("aqicast_out")));
    if (doc.contains("diagnostics")) {
      const auto& d = doc.at("diagnostics");
      for (const auto& [key, value] : d.items()) {
        if (key == "city") {
          if (!value.is_null()) c.diagnostics.city = value.get<std::string>();
        } else if (key == "period") {
          c.diagnostics.period = json_count(value, "diagnostics.period");
          if (c.diagnostics.period < 2) throw ConfigError("diagnostics.period must be at least 2");
        } else if (key == "acf_lags") {
          c.diagnostics.acf_lags = json_count(value, "diagnostics.acf_lags");
        } else {
          throw ConfigError("unknown diagnostics key '" + key + "'");
        }
      }
    }
    if (doc.contains("models")) {
      for (const auto& m : doc.at("models")) {
        ModelSpec spec;
        spec.family = models::parse_family(m.at("family").get<std::string>());
        spec.name = m.value("name", models::family_name(spec.family));
        if (m.contains("grid")) {
          if (!m.at("grid").is_object()) throw ConfigError("grid of model '" + spec.name + "' must be an object");
          spec.grid = m.at("grid");
        }
        for (const auto& [key, value] : m.items()) {
          if (key != "family" && key != "name" && key != "grid") {
            throw ConfigError("unknown key '" + key + "' in model '" + spec.name + "'");
          }
        }
        c.models.push_back(std::move(spec));
      }
    } else {
      for (auto f : {models::Family::kBoostOblivious, models::Family::kBoostLevel, models::Family::kForest,
                     models::Family::kSvr}) {
        c.models.push_back({models::family_name(f), f, std::nullopt});
      }
    }
    if (doc.contains("sarimax") && !doc.at("sarimax").is_null()) {
      const auto& s = doc.at("sarimax");
      SarimaxStageSpec st;
      st.station = s.at("station").get<std::string>();
      const auto order = size_list(s.value("order", ojson::array({0, 0, 0})), 3, "sarimax.order");
      const auto seasonal = size_list(s.value("seasonal", ojson::array({0, 0, 0, 12})), 4, "sarimax.seasonal");
      st.spec.p = order[0];
      st.spec.d = order[1];
      st.spec.q = order[2];
      st.spec.P = seasonal[0];
      st.spec.D = seasonal[1];
      st.spec.Q = seasonal[2];
      st.spec.m = seasonal[3];
      st.spec.exog = s.value("exog", std::vector<std::string>{});
      if (s.contains("horizon")) st.horizon = json_count(s.at("horizon"), "sarimax.horizon");
      for (const auto& [key, value] : s.items()) {
        if (key != "station" && key != "order" && key != "seasonal" && key != "exog" && key != "horizon") {
          throw ConfigError("unknown sarimax key '" + key + "'");
        }
      }
      st.spec.validate();
      c.sarimax = std::move(st);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  ojson doc;
  try {
    doc = ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(doc, path.parent_path());
}

ojson RunConfig::to_json() const {
  ojson doc;
  ojson in = ojson::array();
  for (const auto& p : inputs) in.push_back(p.string());
  doc["inputs"] = in;
  doc["schema"] = schema ? ojson(schema->string()) : ojson(nullptr);
  doc["breakpoints"] = breakpoints.string();
  doc["aqi_mode"] = aqi_mode_name(aqi_mode);
  doc["drop"] = prep.drop;
  doc["encode"] = prep.encode;
  doc["split"] = {{"train_start", prep.train_start ? ojson(prep.train_start->iso()) : ojson(nullptr)},
                  {"boundary", prep.boundary.iso()},
                  {"test_end", prep.test_end ? ojson(prep.test_end->iso()) : ojson(nullptr)}};
  doc["outlier_k"] = prep.outlier_k;
  doc["folds"] = folds;
  doc["seed"] = seed;
  doc["threads"] = threads ? ojson(*threads) : ojson(nullptr);
  doc["output_dir"] = output_dir.string();
  doc["diagnostics"] = {{"city", diagnostics.city ? ojson(*diagnostics.city) : ojson(nullptr)},
                        {"period", diagnostics.period},
                        {"acf_lags", diagnostics.acf_lags}};
  ojson ms = ojson::array();
  for (const auto& m : models) {
    ojson e{{"name", m.name}, {"family", models::family_name(m.family)}};
    if (m.grid) e["grid"] = *m.grid;
    ms.push_back(std::move(e));
  }
  doc["models"] = std::move(ms);
  if (sarimax) {
    const auto& s = sarimax->spec;
    doc["sarimax"] = {{"station", sarimax->station},
                      {"order", {s.p, s.d, s.q}},
                      {"seasonal", {s.P, s.D, s.Q, s.m}},
                      {"exog", s.exog},
                      {"horizon", sarimax->horizon}};
  }
  return doc;
}

void RunConfig::validate() const {
  for (const auto& p : inputs) {
    if (!fs::is_regular_file(p)) throw ConfigError("input file not found: " + p.string());
  }
  if (schema && !fs::is_regular_file(*schema)) throw ConfigError("schema file not found: " + schema->string());
  if (!fs::is_regular_file(breakpoints)) throw ConfigError("breakpoint file not found: " + breakpoints.string());
  if (output_dir.empty()) throw ConfigError("output_dir is empty");
  static const std::regex safe("[A-Za-z0-9_.-]+");
  std::set<std::string> names;
  for (const auto& m : models) {
    if (!std::regex_match(m.name, safe) || m.name == "." || m.name == "..") {
      throw ConfigError("model name '" + m.name + "' must use only letters, digits, '_', '-' and '.'");
    }
    if (!names.insert(m.name).second) throw ConfigError("duplicate model name '" + m.name + "'");
  }
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ExitCode::kFailure, "SHA-256 computation failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::size_t Manifest::artifact_count() const {
  std::size_t n = 0;
  for (const auto& s : stages) n += s.outputs.size();
  return n;
}

const StageRecord* Manifest::stage(const std::string& name) const {
  for (const auto& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

ojson Manifest::to_json() const {
  ojson doc;
  doc["format"] = "aqicast-manifest";
  doc["version"] = 1;
  doc["config_sha256"] = config_sha256;
  doc["completed"] = completed;
  ojson st = ojson::array();
  for (const auto& s : stages) {
    ojson outs = ojson::array();
    for (const auto& a : s.outputs) outs.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
    ojson rec{{"name", s.name}, {"status", s.status}, {"inputs", s.inputs}, {"outputs", std::move(outs)}};
    if (!s.error.empty()) rec["error"] = s.error;
    st.push_back(std::move(rec));
  }
  doc["stages"] = std::move(st);
  return doc;
}

Manifest Manifest::from_json(const nlohmann::json& doc) {
  Manifest m;
  try {
    m.config_sha256 = doc.at("config_sha256").get<std::string>();
    m.completed = doc.at("completed").get<bool>();
    for (const auto& s : doc.at("stages")) {
      StageRecord rec;
      rec.name = s.at("name").get<std::string>();
      rec.status = s.at("status").get<std::string>();
      rec.inputs = s.at("inputs").get<std::vector<std::string>>();
      rec.error = s.value("error", "");
      for (const auto& a : s.at("outputs")) {
        rec.outputs.push_back(
            {a.at("path").get<std::string>(), a.at("sha256").get<std::string>(), a.at("bytes").get<std::uintmax_t>()});
      }
      m.stages.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

Manifest Manifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("manifest " + path.string() + ": " + e.what());
  }
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : stage_table()) out.push_back(name);
    return out;
  }();
  return names;
}

StationForecast forecast_station(const DataTable& table, const std::string& station, const sarimax::SarimaSpec& spec,
                                 std::size_t horizon, bool holdout, const sarimax::FitOptions& options) {
  spec.validate();
  if (!spec.exog.empty() && !holdout) {
    throw ConfigError("future values of the exogenous columns are unknown; forecast with a hold-out instead");
  }
  auto y = diagnostics::daily_series(table, diagnostics::Scope::kStation, station, preprocess::kTarget);
  std::vector<diagnostics::Series> xs;
  for (const auto& col : spec.exog) {
    xs.push_back(diagnostics::daily_series(table, diagnostics::Scope::kStation, station, col));
  }
  // Align everything on the common date range.
  Date first = y.dates.front();
  Date last = y.dates.back();
  for (const auto& x : xs) {
    first = std::max(first, x.dates.front());
    last = std::min(last, x.dates.back());
  }
  if (last < first) throw DataError("target and exogenous series do not overlap for '" + station + "'");
  auto clip = [&](const diagnostics::Series& s) {
    const long off = first.days_since_epoch() - s.dates.front().days_since_epoch();
    const long len = last.days_since_epoch() - first.days_since_epoch() + 1;
    return std::vector<double>(s.values.begin() + off, s.values.begin() + off + len);
  };
  const std::vector<double> values = clip(y);
  std::vector<std::vector<double>> exog;
  for (const auto& x : xs) exog.push_back(clip(x));

  const std::size_t n = values.size();
  const std::size_t fit_n = holdout ? (n > horizon ? n - horizon : 0) : n;
  if (fit_n == 0) throw DataError("series of " + std::to_string(n) + " days is too short for a " +
                                  std::to_string(horizon) + "-day hold-out");
  std::vector<std::vector<double>> exog_fit, exog_future;
  for (const auto& x : exog) {
    exog_fit.emplace_back(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(fit_n));
    exog_future.emplace_back(x.begin() + static_cast<std::ptrdiff_t>(fit_n), x.end());
  }

  StationForecast out;
  out.fit = sarimax::fit_sarimax(std::span(values).first(fit_n), exog_fit, spec, options);
  out.forecast = sarimax::forecast(out.fit, horizon, exog_future);
  for (std::size_t h = 0; h < horizon; ++h) {
    out.dates.push_back(Date::from_days(first.days_since_epoch() + static_cast<long>(fit_n + h)));
  }
  if (holdout) out.actual.assign(values.begin() + static_cast<std::ptrdiff_t>(fit_n), values.end());

  out.report = ojson::parse(out.fit.to_json().dump());
  out.report["station"] = station;
  out.report["series_first"] = first.iso();
  out.report["fit_days"] = fit_n;
  out.report["horizon"] = horizon;
  out.report["target_interpolated_days"] = y.interpolated;
  if (holdout && horizon > 0) {
    out.report["holdout_metrics"] = ojson::parse(evaluate::metrics(out.actual, out.forecast.mean).to_json().dump());
  }
  return out;
}

void write_forecast_csv(const StationForecast& result, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  csv::write_row(out, {"Date", "actual", "forecast", "lower95", "upper95"});
  for (std::size_t h = 0; h < result.dates.size(); ++h) {
    csv::write_row(out, {result.dates[h].iso(), h < result.actual.size() ? csv::format_double(result.actual[h]) : "",
                         csv::format_double(result.forecast.mean[h]), csv::format_double(result.forecast.lower[h]),
                         csv::format_double(result.forecast.upper[h])});
  }
}

RunResult run_pipeline(const RunConfig& config, const RunOptions& options) {
  RunResult result;
  // thread count never changes results, so it stays out of the hash
  ojson hashed = config.to_json();
  hashed.erase("threads");
  result.manifest.config_sha256 = sha256_hex(hashed.dump());
  const fs::path manifest_path = config.output_dir / "manifest.json";
  auto finish = [&](ExitCode code, std::string message) {
    result.status = code;
    result.message = std::move(message);
    try {
      write_json(manifest_path, result.manifest.to_json());
    } catch (const std::exception& e) {
      if (result.status == ExitCode::kOk) result.status = ExitCode::kData;
      result.message += (result.message.empty() ? "" : "; ") + std::string(e.what());
    }
    return result;
  };

  try {
    config.validate();
    fs::create_directories(config.output_dir);
  } catch (const Error& e) {
    result.status = e.code();
    result.message = e.what();
    return result;
  } catch (const std::exception& e) {
    result.status = ExitCode::kConfig;
    result.message = e.what();
    return result;
  }

  const auto& names = stage_names();
  std::size_t start = 0;
  if (options.resume_from) {
    const auto it = std::find(names.begin(), names.end(), *options.resume_from);
    if (it == names.end()) {
      result.status = ExitCode::kConfig;
      result.message = "unknown stage '" + *options.resume_from + "'";
      return result;
    }
    start = static_cast<std::size_t>(it - names.begin());
    Manifest previous;
    try {
      previous = Manifest::load(manifest_path);
    } catch (const Error& e) {
      result.status = e.code();
      result.message = e.what();
      return result;
    }
    if (previous.config_sha256 != result.manifest.config_sha256) {
      result.status = ExitCode::kConfig;
      result.message = "existing manifest was produced by a different config";
      return result;
    }
    for (std::size_t i = 0; i < start; ++i) {
      const auto* rec = previous.stage(names[i]);
      if (names[i] == "sarimax" && !config.sarimax) continue;
      if (!rec || rec->status != "ok") {
        result.status = ExitCode::kConfig;
        result.message = "cannot resume: stage '" + names[i] + "' did not complete in the previous run";
        return result;
      }
      result.manifest.stages.push_back(*rec);
    }
  }

  for (std::size_t i = start; i < names.size(); ++i) {
    if (names[i] == "sarimax" && !config.sarimax) continue;
    result.manifest.stages.push_back({names[i], {}, {}, "running", ""});
    StageRecord& rec = result.manifest.stages.back();
    StageContext ctx(config.output_dir, rec);
    try {
      stage_table()[i].second(config, ctx);
      ctx.seal();
      rec.status = "ok";
    } catch (const Error& e) {
      ctx.seal();
      rec.status = "failed";
      rec.error = e.what();
      return finish(e.code(), "stage " + names[i] + ": " + e.what());
    } catch (const std::exception& e) {
      ctx.seal();
      rec.status = "failed";
      rec.error = e.what();
      return finish(ExitCode::kFailure, "stage " + names[i] + ": " + e.what());
    }
  }
  result.manifest.completed = true;
  return finish(ExitCode::kOk, "");
}

}  // namespace aqicast::pipeline
