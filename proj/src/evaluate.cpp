#include "aqicast/evaluate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "aqicast/csv.hpp"
#include "aqicast/error.hpp"
#include "aqicast/parallel.hpp"
#include "aqicast/stats.hpp"

namespace aqicast::evaluate {
namespace {

void check_pair(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) {
    throw DataError("actuals and predictions differ in length (" + std::to_string(y.size()) + " vs " +
                    std::to_string(yhat.size()) + ")");
  }
  if (y.empty()) throw DataError("no rows to evaluate");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i]) || !std::isfinite(yhat[i])) {
      throw DataError("non-finite actual or prediction at row " + std::to_string(i));
    }
  }
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> optional_from(const nlohmann::json& v) {
  return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw DataError("cannot parse " + what + " value '" + text + "'");
  return v;
}

}  // namespace

nlohmann::json MetricsReport::to_json() const {
  return {{"mse", mse},   {"rmse", rmse}, {"mae", mae},
          {"r2", optional_json(r2)},      {"mape", optional_json(mape)},
          {"n", n},       {"mape_excluded", mape_excluded}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& doc) {
  try {
    MetricsReport m;
    m.mse = doc.at("mse").get<double>();
    m.rmse = doc.at("rmse").get<double>();
    m.mae = doc.at("mae").get<double>();
    m.r2 = optional_from(doc.at("r2"));
    m.mape = optional_from(doc.value("mape", nlohmann::json(nullptr)));
    m.n = doc.at("n").get<std::size_t>();
    m.mape_excluded = doc.value("mape_excluded", std::size_t{0});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed metrics report: ") + e.what());
  }
}

MetricsReport metrics(std::span<const double> y, std::span<const double> yhat) {
  check_pair(y, yhat);
  MetricsReport r;
  r.n = y.size();
  const double n = static_cast<double>(y.size());
  double ss_res = 0.0;
  double abs_sum = 0.0;
  double pct_sum = 0.0;
  std::size_t pct_n = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - yhat[i];
    ss_res += e * e;
    abs_sum += std::abs(e);
    if (y[i] != 0.0) {
      pct_sum += std::abs(e / y[i]);
      ++pct_n;
    }
  }
  r.mse = ss_res / n;
  r.rmse = std::sqrt(r.mse);
  r.mae = abs_sum / n;
  const double ss_tot = stats::sum_squares(y);
  if (ss_tot > 0.0) r.r2 = 1.0 - ss_res / ss_tot;
  if (pct_n > 0) r.mape = 100.0 * pct_sum / static_cast<double>(pct_n);
  r.mape_excluded = y.size() - pct_n;
  return r;
}

nlohmann::json ResidualReport::to_json() const {
  auto q = nlohmann::json::array();
  for (const auto& [p, v] : quantiles) q.push_back({{"p", p}, {"value", v}});
  return {{"mean", mean},
          {"median", median},
          {"std", std},
          {"quantiles", q},
          {"histogram", {{"lo", histogram.lo}, {"hi", histogram.hi}, {"counts", histogram.counts}}}};
}

ResidualReport residual_report(std::span<const double> y, std::span<const double> yhat, std::size_t bins) {
  check_pair(y, yhat);
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  std::vector<double> res(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) res[i] = y[i] - yhat[i];
  ResidualReport r;
  r.mean = stats::mean(res);
  r.std = stats::sample_std(res);
  std::vector<double> sorted = res;
  std::sort(sorted.begin(), sorted.end());
  r.median = stats::quantile_sorted(sorted, 0.5);
  for (double p : {0.05, 0.25, 0.5, 0.75, 0.95}) r.quantiles.emplace_back(p, stats::quantile_sorted(sorted, p));
  r.histogram.lo = sorted.front();
  r.histogram.hi = sorted.back();
  r.histogram.counts.assign(bins, 0);
  const double width = (r.histogram.hi - r.histogram.lo) / static_cast<double>(bins);
  for (double v : res) {
    std::size_t b = 0;
    if (width > 0.0) {
      b = static_cast<std::size_t>((v - r.histogram.lo) / width);
      b = std::min(b, bins - 1);
    }
    ++r.histogram.counts[b];
  }
  return r;
}

std::vector<Fold> expanding_window_folds(std::span<const Date> dates, std::size_t folds) {
  if (folds < 1) throw ConfigError("fold count must be at least 1");
  const std::vector<Date> unique = [&] {
    std::set<Date> s(dates.begin(), dates.end());
    return std::vector<Date>(s.begin(), s.end());
  }();
  const std::size_t u = unique.size();
  const std::size_t block = u / (folds + 1);
  if (block == 0) {
    throw DataError(std::to_string(u) + " distinct dates cannot form " + std::to_string(folds) +
                    " expanding-window folds");
  }
  std::vector<Fold> out;
  for (std::size_t k = 0; k < folds; ++k) {
    const std::size_t start = u - (folds - k) * block;
    Fold f;
    f.train_end = unique[start - 1];
    f.validation_start = unique[start];
    f.validation_end = unique[start + block - 1];
    for (std::size_t r = 0; r < dates.size(); ++r) {
      if (dates[r] <= f.train_end) {
        f.train.push_back(r);
      } else if (dates[r] <= f.validation_end) {
        f.validation.push_back(r);
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::size_t ParamGrid::size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

nlohmann::json ParamGrid::combination(std::size_t index) const {
  if (index >= size()) throw ConfigError("grid combination index out of range");
  nlohmann::json params = nlohmann::json::object();
  std::vector<std::size_t> digits(axes.size());
  for (std::size_t a = axes.size(); a-- > 0;) {
    digits[a] = index % axes[a].values.size();
    index /= axes[a].values.size();
  }
  for (std::size_t a = 0; a < axes.size(); ++a) params[axes[a].name] = axes[a].values[digits[a]];
  return params;
}

nlohmann::ordered_json ParamGrid::to_json() const {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& a : axes) {
    auto values = nlohmann::ordered_json::array();
    for (const auto& v : a.values) values.push_back(nlohmann::ordered_json::parse(v.dump()));
    doc[a.name] = std::move(values);
  }
  return doc;
}

ParamGrid ParamGrid::from_json(const nlohmann::ordered_json& doc) {
  if (!doc.is_object()) throw ConfigError("a parameter grid must be a JSON object of axes");
  ParamGrid grid;
  for (const auto& [key, value] : doc.items()) {
    GridAxis axis{key, {}};
    if (value.is_array()) {
      for (const auto& v : value) axis.values.push_back(nlohmann::json::parse(v.dump()));
    } else {
      axis.values.push_back(nlohmann::json::parse(value.dump()));
    }
    if (axis.values.empty()) throw ConfigError("grid axis '" + key + "' has no values");
    grid.axes.push_back(std::move(axis));
  }
  return grid;
}

nlohmann::ordered_json GridSearchResult::to_json() const {
  nlohmann::ordered_json doc;
  doc["family"] = models::family_name(family);
  doc["grid"] = grid.to_json();
  doc["folds"] = folds;
  doc["combinations"] = entries.size();
  auto rows = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json row;
    row["params"] = nlohmann::ordered_json::parse(e.params.dump());
    row["fold_rmse"] = e.fold_rmse;
    row["mean_rmse"] = std::isfinite(e.mean_rmse) ? nlohmann::ordered_json(e.mean_rmse) : nlohmann::ordered_json("inf");
    if (!e.error.empty()) row["error"] = e.error;
    rows.push_back(std::move(row));
  }
  doc["results"] = std::move(rows);
  doc["best_index"] = best_index;
  doc["best_params"] = nlohmann::ordered_json::parse(best().params.dump());
  doc["best_score"] =
      std::isfinite(best().mean_rmse) ? nlohmann::ordered_json(best().mean_rmse) : nlohmann::ordered_json("inf");
  doc["tied_with_best"] = tied_with_best;
  doc["tie_break"] = tie_break;
  return doc;
}

nlohmann::json with_seed(models::Family family, nlohmann::json params, std::optional<std::uint64_t> seed) {
  using models::Family;
  const bool seeded = family == Family::kForest || family == Family::kBoostLevel || family == Family::kBoostOblivious;
  if (!seed || !seeded) return params;
  if (params.contains("seed") || params.contains("random_seed") || params.contains("random_state")) return params;
  params["seed"] = *seed;
  return params;
}

GridSearchResult grid_search(models::Family family, const ParamGrid& grid, const DataTable& train,
                             const GridOptions& options) {
  for (const auto& a : grid.axes) {
    if (a.values.empty()) throw ConfigError("grid axis '" + a.name + "' has no values");
  }
  const auto data = models::training_data(train, options.target);
  std::vector<Date> dates;
  dates.reserve(data.source_rows.size());
  for (std::size_t r : data.source_rows) dates.push_back(train.date[r]);
  const auto folds = expanding_window_folds(dates, options.folds);

  struct FoldData {
    models::FeatureFrame train;
    std::vector<double> y_train;
    models::FeatureFrame valid;
    std::vector<double> y_valid;
  };
  std::vector<FoldData> fold_data;
  for (const auto& f : folds) {
    FoldData fd;
    fd.train = {data.frame.schema, data.frame.X.take_rows(f.train)};
    fd.valid = {data.frame.schema, data.frame.X.take_rows(f.validation)};
    for (std::size_t r : f.train) fd.y_train.push_back(data.y[r]);
    for (std::size_t r : f.validation) fd.y_valid.push_back(data.y[r]);
    fold_data.push_back(std::move(fd));
  }

  GridSearchResult result;
  result.family = family;
  result.grid = grid;
  result.folds = folds.size();
  result.entries.resize(grid.size());
  parallel_for(grid.size(), options.threads, [&](std::size_t i) {
    GridEntry& entry = result.entries[i];
    entry.params = with_seed(family, grid.combination(i), options.seed);
    try {
      double sum = 0.0;
      for (const auto& fd : fold_data) {
        const auto model = models::fit_model(family, entry.params, fd.train, fd.y_train, 1);
        const auto pred = models::predict(model, fd.valid);
        const double rmse = metrics(fd.y_valid, pred).rmse;
        entry.fold_rmse.push_back(rmse);
        sum += rmse;
      }
      entry.mean_rmse = sum / static_cast<double>(fold_data.size());
    } catch (const std::exception& e) {
      entry.mean_rmse = std::numeric_limits<double>::infinity();
      entry.error = e.what();
    }
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.entries.size(); ++i) {
    if (result.entries[i].mean_rmse < result.entries[best].mean_rmse) best = i;
  }
  result.best_index = best;
  for (std::size_t i = 0; i < result.entries.size(); ++i) {
    if (i != best && result.entries[i].mean_rmse == result.entries[best].mean_rmse) ++result.tied_with_best;
  }
  result.tie_break = result.tied_with_best == 0
                         ? "unique minimum"
                         : std::to_string(result.tied_with_best) +
                               " other combination(s) tie; the first in enumeration order was kept";
  return result;
}

nlohmann::json Evaluation::to_json() const {
  return {{"metrics", metrics.to_json()},
          {"residuals", residuals.to_json()},
          {"n_predictions", predictions.size()},
          {"dropped_missing_target", dropped_missing_target}};
}

Evaluation evaluate_model(const models::Model& model, const DataTable& test, const std::string& target,
                          std::size_t bins) {
  const auto data = models::training_data(test, target);
  const auto pred = models::predict(model, data.frame);
  Evaluation ev;
  ev.metrics = metrics(data.y, pred);
  ev.residuals = residual_report(data.y, pred, bins);
  ev.dropped_missing_target = data.dropped_missing_target;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::size_t r = data.source_rows[i];
    ev.predictions.push_back({test.station[r], test.date[r], data.y[i], pred[i]});
  }
  return ev;
}

void write_predictions_csv(const std::vector<Prediction>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  csv::write_row(out, {"Station", "Date", "actual", "predicted"});
  for (const auto& p : rows) {
    csv::write_row(out, {p.station, p.date.iso(), csv::format_double(p.actual), csv::format_double(p.predicted)});
  }
}

std::vector<Prediction> read_predictions_csv(const std::filesystem::path& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows[0] != csv::Row{"Station", "Date", "actual", "predicted"}) {
    throw SchemaError(path.string() + ": expected header Station,Date,actual,predicted");
  }
  std::vector<Prediction> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 4) throw SchemaError(path.string() + ": row " + std::to_string(i) + " has " +
                                         std::to_string(r.size()) + " fields");
    const auto date = Date::parse(r[1]);
    if (!date) throw DataError(path.string() + ": bad date '" + r[1] + "'");
    out.push_back({r[0], *date, parse_double(r[2], "actual"), parse_double(r[3], "predicted")});
  }
  return out;
}

std::vector<std::string> PerformanceMatrix::ranking() const {
  std::vector<std::string> out;
  for (const auto& r : rows) out.push_back(r.model);
  return out;
}

const MatrixRow& PerformanceMatrix::at(const std::string& model) const {
  for (const auto& r : rows) {
    if (r.model == model) return r;
  }
  throw ConfigError("model '" + model + "' is not in the performance matrix");
}

std::string PerformanceMatrix::to_csv() const {
  std::ostringstream out;
  csv::write_row(out, {"model", "MSE", "RMSE", "MAE", "R2", "rank"});
  for (const auto& r : rows) {
    csv::write_row(out, {r.model, csv::format_double(r.mse), csv::format_double(r.rmse), csv::format_double(r.mae),
                         r.r2 ? csv::format_double(*r.r2) : "", std::to_string(r.rank)});
  }
  return out.str();
}

PerformanceMatrix PerformanceMatrix::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  PerformanceMatrix m;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto r = csv::split_line(line);
    if (header) {
      if (r != csv::Row{"model", "MSE", "RMSE", "MAE", "R2", "rank"}) {
        throw SchemaError("performance matrix header must be model,MSE,RMSE,MAE,R2,rank");
      }
      header = false;
      continue;
    }
    if (r.size() != 6) throw SchemaError("performance matrix row has " + std::to_string(r.size()) + " fields");
    MatrixRow row;
    row.model = r[0];
    row.mse = parse_double(r[1], "MSE");
    row.rmse = parse_double(r[2], "RMSE");
    row.mae = parse_double(r[3], "MAE");
    if (!r[4].empty()) row.r2 = parse_double(r[4], "R2");
    row.rank = static_cast<std::size_t>(parse_double(r[5], "rank"));
    m.rows.push_back(std::move(row));
  }
  if (header) throw SchemaError("empty performance matrix");
  return m;
}

nlohmann::json PerformanceMatrix::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"model", r.model},
                   {"MSE", r.mse},
                   {"RMSE", r.rmse},
                   {"MAE", r.mae},
                   {"R2", optional_json(r.r2)},
                   {"rank", r.rank}});
  }
  return {{"rows", arr}, {"ranking", ranking()}};
}

PerformanceMatrix PerformanceMatrix::from_json(const nlohmann::json& doc) {
  PerformanceMatrix m;
  try {
    for (const auto& r : doc.at("rows")) {
      m.rows.push_back({r.at("model").get<std::string>(), r.at("MSE").get<double>(), r.at("RMSE").get<double>(),
                        r.at("MAE").get<double>(), optional_from(r.at("R2")), r.at("rank").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed performance matrix: ") + e.what());
  }
  return m;
}

PerformanceMatrix compare_models(const std::vector<std::pair<std::string, MetricsReport>>& entries) {
  if (entries.empty()) throw ConfigError("nothing to compare");
  std::set<std::string> seen;
  PerformanceMatrix m;
  for (const auto& [name, report] : entries) {
    if (!seen.insert(name).second) throw ConfigError("duplicate model name '" + name + "'");
    m.rows.push_back({name, report.mse, report.rmse, report.mae, report.r2, 0});
  }
  std::stable_sort(m.rows.begin(), m.rows.end(), [](const MatrixRow& a, const MatrixRow& b) {
    if (a.r2.has_value() != b.r2.has_value()) return a.r2.has_value();
    return a.r2 && *a.r2 > *b.r2;
  });
  for (std::size_t i = 0; i < m.rows.size(); ++i) m.rows[i].rank = i + 1;
  return m;
}

}  // namespace aqicast::evaluate
