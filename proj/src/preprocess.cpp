#include "aqicast/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "aqicast/error.hpp"
#include "aqicast/stats.hpp"

namespace aqicast::preprocess {
namespace {

using GroupKey = std::tuple<std::string, int, unsigned, std::string>;

GroupKey key_of(const ImputationEntry& e) { return {e.station, e.year, e.month, e.column}; }

void require_stage(const DataTable& table, std::initializer_list<Stage> allowed, std::string_view step) {
  for (Stage s : allowed) {
    if (table.stage == s) return;
  }
  std::string expected;
  for (Stage s : allowed) {
    if (!expected.empty()) expected += " or ";
    expected += stage_name(s);
  }
  throw PipelineOrderError(std::string(step) + " requires a " + expected + " table, got " +
                           std::string(stage_name(table.stage)));
}

/// Calls fn(begin, end) for each contiguous (station, year, month) run.
template <typename Fn>
void for_each_station_month(const DataTable& table, Fn&& fn) {
  std::size_t begin = 0;
  while (begin < table.rows()) {
    std::size_t end = begin + 1;
    while (end < table.rows() && table.station[end] == table.station[begin] &&
           table.date[end].year() == table.date[begin].year() &&
           table.date[end].month() == table.date[begin].month()) {
      ++end;
    }
    fn(begin, end);
    begin = end;
  }
}

bool listed(const NumericColumn& col, const std::vector<std::string>& names) {
  return std::any_of(names.begin(), names.end(),
                     [&](const std::string& n) { return n == col.name || n == col.variable; });
}

enum class KeyColumn { kState, kCity, kStation };

std::optional<KeyColumn> key_column(const std::string& name) {
  if (name == "State") return KeyColumn::kState;
  if (name == "City") return KeyColumn::kCity;
  if (name == "Station" || name == "Monitoring Station") return KeyColumn::kStation;
  return std::nullopt;
}

const std::vector<std::string>& key_values(const DataTable& table, KeyColumn which) {
  switch (which) {
    case KeyColumn::kState: return table.state;
    case KeyColumn::kCity: return table.city;
    case KeyColumn::kStation: return table.station;
  }
  return table.state;
}

}  // namespace

const std::vector<std::string>& retained_pollutants() {
  static const std::vector<std::string> names{"PM2.5", "PM10", "NO", "NO2", "NOx", "NH3", "SO2", "CO"};
  return names;
}

const std::vector<std::string>& default_drop_list() {
  static const std::vector<std::string> names{"Temp",    "RH",      "WS",     "WD", "SR",
                                              "Benzene", "Toluene", "Xylene", "O3"};
  return names;
}

std::size_t ImputationLog::total_mean_filled() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.mean_filled;
  return n;
}

std::size_t ImputationLog::total_zero_filled() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.zero_filled;
  return n;
}

void ImputationLog::merge(const ImputationLog& other) {
  std::map<GroupKey, ImputationEntry> merged;
  for (const auto& e : entries) merged.emplace(key_of(e), e);
  for (const auto& e : other.entries) {
    auto [it, inserted] = merged.emplace(key_of(e), e);
    if (!inserted) {
      it->second.mean_filled += e.mean_filled;
      it->second.zero_filled += e.zero_filled;
      if (!it->second.group_mean) it->second.group_mean = e.group_mean;
    }
  }
  entries.clear();
  for (auto& [k, e] : merged) entries.push_back(std::move(e));
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

nlohmann::json ImputationLog::to_json() const {
  nlohmann::json doc;
  doc["total_mean_filled"] = total_mean_filled();
  doc["total_zero_filled"] = total_zero_filled();
  doc["warnings"] = warnings;
  doc["entries"] = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json j{{"station", e.station},
                     {"year", e.year},
                     {"month", e.month},
                     {"column", e.column},
                     {"original_missing", e.original_missing},
                     {"mean_filled", e.mean_filled},
                     {"zero_filled", e.zero_filled}};
    j["group_mean"] = e.group_mean ? nlohmann::json(*e.group_mean) : nlohmann::json(nullptr);
    doc["entries"].push_back(std::move(j));
  }
  return doc;
}

std::pair<DataTable, ImputationLog> impute_group_mean(const DataTable& table, const std::vector<std::string>& exclude) {
  require_stage(table, {Stage::kRaw, Stage::kGroupImputed}, "group-mean imputation");
  DataTable out = table;
  ImputationLog log;
  for (auto& col : out.numeric) {
    if (col.kind != ColumnKind::kNumeric || listed(col, exclude)) continue;
    for_each_station_month(out, [&](std::size_t begin, std::size_t end) {
      double sum = 0.0;
      std::size_t present = 0;
      for (std::size_t r = begin; r < end; ++r) {
        if (col.cells[r]) {
          sum += *col.cells[r];
          ++present;
        }
      }
      const std::size_t missing = (end - begin) - present;
      if (missing == 0) return;
      ImputationEntry entry{out.station[begin], out.date[begin].year(), out.date[begin].month(), col.name,
                            missing, 0, 0, std::nullopt};
      if (present > 0) {
        const double mean = sum / static_cast<double>(present);
        for (std::size_t r = begin; r < end; ++r) {
          if (!col.cells[r]) col.cells[r] = mean;
        }
        entry.mean_filled = missing;
        entry.group_mean = mean;
      }
      log.entries.push_back(std::move(entry));
    });
  }
  std::sort(log.entries.begin(), log.entries.end(),
            [](const ImputationEntry& a, const ImputationEntry& b) { return key_of(a) < key_of(b); });
  out.stage = Stage::kGroupImputed;
  return {std::move(out), std::move(log)};
}

std::pair<DataTable, ImputationLog> fill_remaining_zero(const DataTable& table, const std::vector<std::string>& columns) {
  require_stage(table, {Stage::kGroupImputed, Stage::kZeroFilled}, "zero fill");
  DataTable out = table;
  ImputationLog log;
  for (const auto& name : columns) {
    if (!out.find(name)) log.warnings.push_back("zero fill: no column '" + name + "'");
  }
  for (auto& col : out.numeric) {
    if (col.kind != ColumnKind::kNumeric || !listed(col, columns)) continue;
    for_each_station_month(out, [&](std::size_t begin, std::size_t end) {
      std::size_t filled = 0;
      for (std::size_t r = begin; r < end; ++r) {
        if (!col.cells[r]) {
          col.cells[r] = 0.0;
          ++filled;
        }
      }
      if (filled == 0) return;
      log.entries.push_back({out.station[begin], out.date[begin].year(), out.date[begin].month(), col.name, filled,
                             0, filled, std::nullopt});
      if (filled == end - begin) {
        log.warnings.push_back("station-month fully zero-filled: " + out.station[begin] + " " +
                               std::to_string(out.date[begin].year()) + "-" + std::to_string(out.date[begin].month()) +
                               " " + col.name);
      }
    });
  }
  std::sort(log.entries.begin(), log.entries.end(),
            [](const ImputationEntry& a, const ImputationEntry& b) { return key_of(a) < key_of(b); });
  out.stage = Stage::kZeroFilled;
  return {std::move(out), std::move(log)};
}

SelectionResult select_features(const DataTable& table, const std::vector<std::string>& drop, const std::string& target) {
  require_stage(table, {Stage::kZeroFilled}, "feature selection");
  const NumericColumn* target_col = table.find(target);
  SelectionResult result;
  for (const auto& name : drop) {
    const NumericColumn* col = table.find(name);
    if (!col) {
      result.warnings.push_back("drop list names absent column '" + name + "'");
      continue;
    }
    if (col == target_col) throw ConfigError("cannot drop the target column '" + target + "'");
  }
  result.table = table;
  result.table.numeric.clear();
  for (const auto& col : table.numeric) {
    if (&col != target_col && listed(col, drop)) {
      result.dropped.push_back(col.name);
    } else {
      result.table.numeric.push_back(col);
    }
  }
  result.table.stage = Stage::kSelected;
  return result;
}

ColumnOutliers column_outliers(const std::string& name, const std::vector<Cell>& cells, double k) {
  std::vector<double> values;
  for (const auto& c : cells) {
    if (c) values.push_back(*c);
  }
  if (values.size() < 4) {
    throw DataError("outlier report: column '" + name + "' has " + std::to_string(values.size()) +
                    " values, need at least 4");
  }
  std::sort(values.begin(), values.end());
  ColumnOutliers out;
  out.column = name;
  out.n = values.size();
  out.q1 = stats::quantile_sorted(values, 0.25);
  out.q3 = stats::quantile_sorted(values, 0.75);
  out.iqr = out.q3 - out.q1;
  out.lower_fence = out.q1 - k * out.iqr;
  out.upper_fence = out.q3 + k * out.iqr;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    if (cells[r] && (*cells[r] < out.lower_fence || *cells[r] > out.upper_fence)) {
      out.flagged.push_back({r, {}, {}, *cells[r]});
    }
  }
  return out;
}

OutlierReport outlier_report(const DataTable& table, double k) {
  OutlierReport report;
  report.k = k;
  for (const auto& col : table.numeric) {
    if (col.kind != ColumnKind::kNumeric) continue;
    try {
      auto entry = column_outliers(col.name, col.cells, k);
      for (auto& f : entry.flagged) {
        f.station = table.station[f.row];
        f.date = table.date[f.row];
      }
      report.columns.push_back(std::move(entry));
    } catch (const DataError& e) {
      ColumnOutliers entry;
      entry.column = col.name;
      entry.error = e.what();
      report.columns.push_back(std::move(entry));
    }
  }
  return report;
}

nlohmann::json OutlierReport::to_json() const {
  nlohmann::json doc;
  doc["k"] = k;
  doc["columns"] = nlohmann::json::array();
  for (const auto& c : columns) {
    nlohmann::json j{{"column", c.column}};
    if (!c.error.empty()) {
      j["error"] = c.error;
    } else {
      j.update({{"n", c.n},
                {"q1", c.q1},
                {"q3", c.q3},
                {"iqr", c.iqr},
                {"lower_fence", c.lower_fence},
                {"upper_fence", c.upper_fence},
                {"flagged_count", c.flagged.size()}});
      auto flagged = nlohmann::json::array();
      for (const auto& f : c.flagged) {
        flagged.push_back({{"row", f.row}, {"station", f.station}, {"date", f.date.iso()}, {"value", f.value}});
      }
      j["flagged"] = std::move(flagged);
    }
    doc["columns"].push_back(std::move(j));
  }
  return doc;
}

std::pair<DataTable, DataTable> time_split(const DataTable& table, const SplitSpec& spec) {
  require_stage(table, {Stage::kSelected}, "time split");
  if (!(spec.train_start < spec.boundary) || !(spec.boundary <= spec.test_end)) {
    throw ConfigError("split requires train_start < boundary <= test_end, got " + spec.train_start.iso() + ", " +
                      spec.boundary.iso() + ", " + spec.test_end.iso());
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const Date& d = table.date[r];
    if (d >= spec.train_start && d < spec.boundary) {
      train_rows.push_back(r);
    } else if (d >= spec.boundary && d <= spec.test_end) {
      test_rows.push_back(r);
    }
  }
  if (train_rows.empty()) throw DataError("split leaves the train side empty (boundary " + spec.boundary.iso() + ")");
  if (test_rows.empty()) throw DataError("split leaves the test side empty (boundary " + spec.boundary.iso() + ")");
  DataTable train = table.take_rows(train_rows);
  DataTable test = table.take_rows(test_rows);
  train.stage = test.stage = Stage::kSplit;
  train.role = SplitRole::kTrain;
  test.role = SplitRole::kTest;
  return {std::move(train), std::move(test)};
}

nlohmann::json EncodingMap::to_json() const {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& c : columns) {
    doc.push_back({{"source", c.source}, {"categories", c.categories}, {"outputs", c.outputs}});
  }
  return doc;
}

EncodingMap EncodingMap::from_json(const nlohmann::json& doc) {
  EncodingMap map;
  try {
    for (const auto& item : doc) {
      map.columns.push_back({item.at("source").get<std::string>(),
                             item.at("categories").get<std::vector<std::string>>(),
                             item.at("outputs").get<std::vector<std::string>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("encoding map: ") + e.what());
  }
  return map;
}

EncodingResult apply_one_hot(const EncodingMap& map, const DataTable& table) {
  require_stage(table, {Stage::kSplit}, "one-hot encoding");
  EncodingResult result;
  result.map = map;
  result.table = table;
  for (const auto& enc : map.columns) {
    const auto which = key_column(enc.source);
    if (!which) throw SchemaError("one-hot: '" + enc.source + "' is not a key/text column");
    const auto& values = key_values(table, *which);
    std::vector<NumericColumn> outputs;
    for (const auto& name : enc.outputs) {
      if (result.table.find(name)) throw SchemaError("one-hot: column '" + name + "' already exists");
      outputs.push_back({name, name, ColumnKind::kIndicator, std::vector<Cell>(table.rows(), 0.0)});
    }
    std::set<std::string> unseen;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      auto it = std::lower_bound(enc.categories.begin(), enc.categories.end(), values[r]);
      if (it == enc.categories.end() || *it != values[r]) {
        unseen.insert(values[r]);
        continue;
      }
      outputs[static_cast<std::size_t>(it - enc.categories.begin())].cells[r] = 1.0;
    }
    for (const auto& u : unseen) {
      result.warnings.push_back("one-hot: unseen " + enc.source + " category '" + u + "' encoded as all zeros");
    }
    for (auto& o : outputs) result.table.numeric.push_back(std::move(o));
  }
  result.table.stage = Stage::kEncoded;
  return result;
}

EncodingResult one_hot(const DataTable& train, const std::vector<std::string>& columns) {
  require_stage(train, {Stage::kSplit}, "one-hot encoding");
  if (train.role == SplitRole::kTest) throw PipelineOrderError("one-hot categories must be fitted on the train split");
  EncodingMap map;
  for (const auto& name : columns) {
    if (train.find(name)) throw SchemaError("one-hot: cannot encode numeric column '" + name + "'");
    const auto which = key_column(name);
    if (!which) throw SchemaError("one-hot: unknown column '" + name + "'");
    const auto& values = key_values(train, *which);
    std::set<std::string> cats(values.begin(), values.end());
    EncodedColumn enc{name, {cats.begin(), cats.end()}, {}};
    for (const auto& c : enc.categories) enc.outputs.push_back(name + "=" + c);
    map.columns.push_back(std::move(enc));
  }
  return apply_one_hot(map, train);
}

nlohmann::json ScalerParams::to_json() const {
  nlohmann::json doc;
  doc["fitted_on"] = fitted_on;
  doc["warnings"] = warnings;
  doc["features"] = nlohmann::json::array();
  for (const auto& f : features) {
    doc["features"].push_back({{"column", f.column}, {"mean", f.mean}, {"std", f.std}, {"scaled", f.scaled}});
  }
  return doc;
}

ScalerParams ScalerParams::from_json(const nlohmann::json& doc) {
  ScalerParams p;
  try {
    p.fitted_on = doc.value("fitted_on", "train");
    for (const auto& f : doc.at("features")) {
      p.features.push_back({f.at("column").get<std::string>(), f.at("mean").get<double>(), f.at("std").get<double>(),
                            f.at("scaled").get<bool>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scaler params: ") + e.what());
  }
  return p;
}

ScalerParams fit_scaler(const DataTable& train, const std::string& target) {
  if (train.role != SplitRole::kTrain) {
    throw PipelineOrderError("scaler must be fitted on the train split only");
  }
  require_stage(train, {Stage::kEncoded}, "scaler fit");
  const NumericColumn* target_col = train.find(target);
  ScalerParams params;
  for (const auto& col : train.numeric) {
    if (col.kind != ColumnKind::kNumeric || &col == target_col) continue;
    std::vector<double> values;
    for (const auto& c : col.cells) {
      if (c) values.push_back(*c);
    }
    if (values.empty()) {
      params.features.push_back({col.name, 0.0, 0.0, false});
      params.warnings.push_back("scaler: '" + col.name + "' has no values; passed through");
      continue;
    }
    FeatureScale f{col.name, stats::mean(values), stats::population_std(values), true};
    if (!(f.std > 0.0)) {
      f.scaled = false;
      params.warnings.push_back("scaler: '" + col.name + "' is constant; passed through unscaled");
    }
    params.features.push_back(f);
  }
  return params;
}

DataTable apply_scaler(const ScalerParams& params, const DataTable& table) {
  require_stage(table, {Stage::kEncoded}, "scaling");
  DataTable out = table;
  for (const auto& f : params.features) {
    NumericColumn* col = out.find(f.column);
    if (!col) throw SchemaError("scaler: table has no column '" + f.column + "'");
    if (!f.scaled) continue;
    for (auto& c : col->cells) {
      if (c) c = (*c - f.mean) / f.std;
    }
  }
  out.stage = Stage::kScaled;
  return out;
}

PrepResult prepare(const DataTable& raw, const PrepConfig& config) {
  if (raw.empty()) throw DataError("cannot preprocess an empty table");
  PrepResult result;
  auto [imputed, mean_log] = impute_group_mean(raw);
  auto [filled, zero_log] = fill_remaining_zero(imputed);
  result.imputation = std::move(mean_log);
  result.imputation.merge(zero_log);
  result.imputed = filled;

  auto selected = select_features(filled, config.drop);
  result.warnings = selected.warnings;
  result.outliers = outlier_report(selected.table, config.outlier_k);

  const auto [min_it, max_it] = std::minmax_element(selected.table.date.begin(), selected.table.date.end());
  if (!config.train_start && config.boundary <= *min_it) {
    throw DataError("split leaves the train side empty (boundary " + config.boundary.iso() + ")");
  }
  if (!config.test_end && config.boundary > *max_it) {
    throw DataError("split leaves the test side empty (boundary " + config.boundary.iso() + ")");
  }
  SplitSpec spec{config.train_start.value_or(*min_it), config.boundary, config.test_end.value_or(*max_it)};
  auto [train, test] = time_split(selected.table, spec);

  auto enc_train = one_hot(train, config.encode);
  auto enc_test = apply_one_hot(enc_train.map, test);
  result.encoding = enc_train.map;
  result.warnings.insert(result.warnings.end(), enc_test.warnings.begin(), enc_test.warnings.end());

  result.scaler = fit_scaler(enc_train.table);
  result.warnings.insert(result.warnings.end(), result.scaler.warnings.begin(), result.scaler.warnings.end());
  result.train = apply_scaler(result.scaler, enc_train.table);
  result.test = apply_scaler(result.scaler, enc_test.table);
  return result;
}

}  // namespace aqicast::preprocess
