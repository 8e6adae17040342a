#include "aqicast/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <Eigen/Dense>

#include "aqicast/csv.hpp"
#include "aqicast/error.hpp"
#include "aqicast/stats.hpp"

namespace aqicast::diagnostics {
namespace {

std::string fmt(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string{}; }

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

void require_variance(std::span<const double> x, const char* what) {
  if (x.empty()) throw DataError(std::string(what) + ": empty series");
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError(std::string(what) + ": non-finite value in series");
  }
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) {
    throw DataError(std::string(what) + ": series has zero variance");
  }
}

// Coefficients of MacKinnon (2010) response surfaces, in powers of 1/nobs.
// Rows are the 1%, 5% and 10% levels.
constexpr double kTauNone[3][4] = {
    {-2.56574, -2.2358, -3.627, 0.0}, {-1.94100, -0.2686, -3.365, 31.223}, {-1.61682, 0.2656, -2.714, 25.364}};
constexpr double kTauConst[3][4] = {{-3.43035, -6.5393, -16.786, -79.433},
                                    {-2.86154, -2.8903, -4.234, -40.040},
                                    {-2.56677, -1.5384, -2.809, 0.0}};
constexpr double kTauTrend[3][4] = {{-3.95877, -9.0531, -28.428, -134.155},
                                    {-3.41049, -4.3904, -9.036, -45.374},
                                    {-3.12705, -2.5856, -3.925, -22.380}};

}  // namespace

ColumnSummary describe_column(const std::string& name, const std::vector<Cell>& cells) {
  std::vector<double> v;
  for (const auto& c : cells) {
    if (c) v.push_back(*c);
  }
  ColumnSummary s;
  s.column = name;
  s.count = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  s.mean = stats::mean(v);
  s.std = v.size() > 1 ? std::optional<double>(stats::sample_std(v)) : std::nullopt;
  s.min = v.front();
  s.q25 = stats::quantile_sorted(v, 0.25);
  s.q50 = stats::quantile_sorted(v, 0.50);
  s.q75 = stats::quantile_sorted(v, 0.75);
  s.max = v.back();
  return s;
}

DescribeTable describe(const DataTable& table) {
  DescribeTable out;
  for (const auto& col : table.numeric) {
    if (col.kind == ColumnKind::kNumeric) out.columns.push_back(describe_column(col.name, col.cells));
  }
  if (out.columns.empty()) throw DataError("describe: table has no numeric columns");
  return out;
}

void DescribeTable::write_csv(const std::string& path) const {
  auto out = open_out(path);
  csv::write_row(out, {"column", "count", "mean", "std", "min", "25%", "50%", "75%", "max"});
  for (const auto& c : columns) {
    csv::write_row(out, {c.column, std::to_string(c.count), fmt(c.mean), fmt(c.std), fmt(c.min), fmt(c.q25),
                         fmt(c.q50), fmt(c.q75), fmt(c.max)});
  }
}

std::optional<double> pearson(std::span<const Cell> x, std::span<const Cell> y) {
  if (x.size() != y.size()) throw DataError("pearson: length mismatch");
  std::vector<double> a, b;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] && y[i]) {
      a.push_back(*x[i]);
      b.push_back(*y[i]);
    }
  }
  if (a.size() < 2) return std::nullopt;
  const double ma = stats::mean(a), mb = stats::mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CorrelationMatrix pearson_matrix(const DataTable& table) {
  if (table.rows() < 2) throw DataError("pearson matrix needs at least two rows");
  CorrelationMatrix m;
  std::vector<const NumericColumn*> cols;
  for (const auto& col : table.numeric) {
    if (col.kind == ColumnKind::kNumeric) {
      cols.push_back(&col);
      m.columns.push_back(col.name);
    }
  }
  const std::size_t k = cols.size();
  m.values.assign(k * k, std::nullopt);
  for (std::size_t i = 0; i < k; ++i) {
    const auto self = pearson(cols[i]->cells, cols[i]->cells);
    m.values[i * k + i] = self ? std::optional<double>(1.0) : std::nullopt;
    for (std::size_t j = i + 1; j < k; ++j) {
      const auto r = pearson(cols[i]->cells, cols[j]->cells);
      m.values[i * k + j] = r;
      m.values[j * k + i] = r;
    }
  }
  return m;
}

void CorrelationMatrix::write_csv(const std::string& path) const {
  auto out = open_out(path);
  csv::Row header{""};
  header.insert(header.end(), columns.begin(), columns.end());
  csv::write_row(out, header);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    csv::Row row{columns[i]};
    for (std::size_t j = 0; j < columns.size(); ++j) row.push_back(fmt(at(i, j)));
    csv::write_row(out, row);
  }
}

Heatmap monthly_heatmap(const DataTable& table, HeatmapGroup group, const std::string& value,
                        const std::string& target) {
  const auto& keys = group == HeatmapGroup::kState ? table.state : table.city;
  const auto& aqi = table.at(target);
  std::set<std::string> available(keys.begin(), keys.end());
  if (!available.count(value)) {
    std::string list;
    for (const auto& a : available) list += (list.empty() ? "" : ", ") + a;
    throw DataError("heatmap: unknown " + std::string(group == HeatmapGroup::kState ? "state" : "city") + " '" +
                    value + "'; available: " + list);
  }
  std::map<int, std::array<std::pair<double, std::size_t>, 12>> acc;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (keys[r] != value) continue;
    auto& slot = acc[table.date[r].year()];
    if (!aqi.cells[r]) continue;
    auto& cell = slot[table.date[r].month() - 1];
    cell.first += *aqi.cells[r];
    ++cell.second;
  }
  Heatmap h;
  h.group_value = value;
  for (const auto& [year, months] : acc) {
    h.years.push_back(year);
    std::array<std::optional<double>, 12> row{};
    for (std::size_t m = 0; m < 12; ++m) {
      if (months[m].second > 0) row[m] = months[m].first / static_cast<double>(months[m].second);
    }
    h.cells.push_back(row);
  }
  return h;
}

void Heatmap::write_csv(const std::string& path) const {
  auto out = open_out(path);
  csv::write_row(out, {"year", "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"});
  for (std::size_t y = 0; y < years.size(); ++y) {
    csv::Row row{std::to_string(years[y])};
    for (const auto& c : cells[y]) row.push_back(fmt(c));
    csv::write_row(out, row);
  }
}

DecompositionResult seasonal_decompose(std::span<const double> series, std::size_t period) {
  const std::size_t n = series.size();
  if (period < 2) throw DataError("decomposition period must be at least 2");
  if (n < 2 * period) {
    throw DataError("decomposition needs at least " + std::to_string(2 * period) + " points, got " + std::to_string(n));
  }
  DecompositionResult out;
  out.period = period;
  out.trend.assign(n, std::nullopt);
  out.residual.assign(n, std::nullopt);

  const std::size_t half = period / 2;
  const bool even = period % 2 == 0;
  for (std::size_t t = half; t + half < n; ++t) {
    double sum = 0.0;
    if (even) {
      sum += 0.5 * series[t - half] + 0.5 * series[t + half];
      for (std::size_t k = t - half + 1; k < t + half; ++k) sum += series[k];
    } else {
      for (std::size_t k = t - half; k <= t + half; ++k) sum += series[k];
    }
    out.trend[t] = sum / static_cast<double>(period);
  }

  std::vector<double> phase_sum(period, 0.0);
  std::vector<std::size_t> phase_count(period, 0);
  for (std::size_t t = 0; t < n; ++t) {
    if (!out.trend[t]) continue;
    phase_sum[t % period] += series[t] - *out.trend[t];
    ++phase_count[t % period];
  }
  out.pattern.resize(period);
  for (std::size_t p = 0; p < period; ++p) out.pattern[p] = phase_sum[p] / static_cast<double>(phase_count[p]);
  const double centre = stats::mean(out.pattern);
  for (auto& v : out.pattern) v -= centre;

  out.seasonal.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    out.seasonal[t] = out.pattern[t % period];
    if (out.trend[t]) out.residual[t] = series[t] - *out.trend[t] - out.seasonal[t];
  }
  return out;
}

void DecompositionResult::write_csv(const std::string& path) const {
  auto out = open_out(path);
  csv::write_row(out, {"t", "trend", "seasonal", "residual"});
  for (std::size_t t = 0; t < seasonal.size(); ++t) {
    csv::write_row(out, {std::to_string(t), fmt(trend[t]), csv::format_double(seasonal[t]), fmt(residual[t])});
  }
}

nlohmann::json AdfReport::to_json() const {
  const char* v = variant == AdfVariant::kNone ? "none" : variant == AdfVariant::kConstant ? "constant" : "constant+trend";
  return {{"statistic", statistic},
          {"lags", lags},
          {"nobs", nobs},
          {"variant", v},
          {"critical_values", {{"1%", crit_1}, {"5%", crit_5}, {"10%", crit_10}}},
          {"p_value", p_value_bracket},
          {"verdict", stationary ? "stationary" : "non-stationary"}};
}

std::size_t schwert_max_lag(std::size_t n) {
  return static_cast<std::size_t>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

double adf_critical_value(AdfVariant variant, double level, std::size_t nobs) {
  const auto& table = variant == AdfVariant::kNone ? kTauNone : variant == AdfVariant::kConstant ? kTauConst : kTauTrend;
  int row;
  if (level == 0.01) {
    row = 0;
  } else if (level == 0.05) {
    row = 1;
  } else if (level == 0.10) {
    row = 2;
  } else {
    throw ConfigError("ADF critical values exist for 0.01, 0.05 and 0.10 only");
  }
  const double inv = 1.0 / static_cast<double>(nobs);
  const auto& c = table[row];
  return c[0] + inv * (c[1] + inv * (c[2] + inv * c[3]));
}

AdfReport adf_test(std::span<const double> series, std::optional<std::size_t> max_lag, AdfVariant variant) {
  require_variance(series, "ADF test");
  const std::size_t n = series.size();
  const std::size_t lags = max_lag.value_or(schwert_max_lag(n));
  if (n < lags + 10) {
    throw DataError("ADF test needs at least max_lag + 10 = " + std::to_string(lags + 10) + " points, got " +
                    std::to_string(n));
  }

  // Rows t = lags+1 .. n-1 (0-based), regressing dy_t on y_{t-1}, dy_{t-1..t-lags}, deterministics.
  const std::size_t nobs = n - lags - 1;
  const std::size_t deterministic = variant == AdfVariant::kNone ? 0 : variant == AdfVariant::kConstant ? 1 : 2;
  const std::size_t k = 1 + lags + deterministic;
  if (nobs <= k) throw DataError("ADF test: too few observations for the regression");

  Eigen::MatrixXd X(nobs, k);
  Eigen::VectorXd dy(nobs);
  for (std::size_t i = 0; i < nobs; ++i) {
    const std::size_t t = i + lags + 1;
    dy(i) = series[t] - series[t - 1];
    X(i, 0) = series[t - 1];
    for (std::size_t j = 1; j <= lags; ++j) X(i, j) = series[t - j] - series[t - j - 1];
    if (deterministic >= 1) X(i, lags + 1) = 1.0;
    if (deterministic == 2) X(i, lags + 2) = static_cast<double>(t);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < static_cast<Eigen::Index>(k)) throw DataError("ADF test: singular regression design");
  const Eigen::VectorXd beta = qr.solve(dy);
  const Eigen::VectorXd resid = dy - X * beta;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(nobs - k);
  const Eigen::MatrixXd xtx_inv = (X.transpose() * X).inverse();
  const double se = std::sqrt(sigma2 * xtx_inv(0, 0));
  if (!(se > 0.0)) throw DataError("ADF test: zero standard error (perfect fit)");

  AdfReport report;
  report.statistic = beta(0) / se;
  report.lags = lags;
  report.nobs = nobs;
  report.variant = variant;
  report.crit_1 = adf_critical_value(variant, 0.01, nobs);
  report.crit_5 = adf_critical_value(variant, 0.05, nobs);
  report.crit_10 = adf_critical_value(variant, 0.10, nobs);
  if (report.statistic < report.crit_1) {
    report.p_value_bracket = "<0.01";
  } else if (report.statistic < report.crit_5) {
    report.p_value_bracket = "<0.05";
  } else if (report.statistic < report.crit_10) {
    report.p_value_bracket = "<0.10";
  } else {
    report.p_value_bracket = ">=0.10";
  }
  report.stationary = report.statistic < report.crit_5;
  return report;
}

std::vector<double> acf(std::span<const double> series, std::size_t nlags) {
  require_variance(series, "acf");
  const std::size_t n = series.size();
  if (2 * nlags >= n) {
    throw DataError("acf: nlags must be below n/2 (nlags " + std::to_string(nlags) + ", n " + std::to_string(n) + ")");
  }
  const double m = stats::mean(series);
  std::vector<double> gamma(nlags + 1, 0.0);
  for (std::size_t lag = 0; lag <= nlags; ++lag) {
    double s = 0.0;
    for (std::size_t t = lag; t < n; ++t) s += (series[t] - m) * (series[t - lag] - m);
    gamma[lag] = s / static_cast<double>(n);
  }
  std::vector<double> out(nlags + 1);
  for (std::size_t lag = 0; lag <= nlags; ++lag) out[lag] = gamma[lag] / gamma[0];
  return out;
}

std::vector<double> pacf(std::span<const double> series, std::size_t nlags) {
  const auto rho = acf(series, nlags);
  std::vector<double> out(nlags + 1, 0.0);
  out[0] = 1.0;
  if (nlags == 0) return out;
  std::vector<double> phi(nlags + 1, 0.0), prev(nlags + 1, 0.0);
  double v = 1.0;
  for (std::size_t k = 1; k <= nlags; ++k) {
    double num = rho[k];
    for (std::size_t j = 1; j < k; ++j) num -= prev[j] * rho[k - j];
    const double a = k == 1 ? rho[1] : num / v;
    phi[k] = a;
    for (std::size_t j = 1; j < k; ++j) phi[j] = prev[j] - a * prev[k - j];
    v *= (1.0 - a * a);
    out[k] = a;
    prev = phi;
  }
  return out;
}

Series daily_series(const DataTable& table, Scope scope, const std::string& value, const std::string& column) {
  const NumericColumn& col = table.at(column);
  const auto& keys = scope == Scope::kState ? table.state : scope == Scope::kCity ? table.city : table.station;
  std::map<long, std::pair<double, std::size_t>> sums;
  bool matched = false;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (keys[r] != value) continue;
    matched = true;
    if (!col.cells[r]) continue;
    auto& [sum, n] = sums[table.date[r].days_since_epoch()];
    sum += *col.cells[r];
    ++n;
  }
  if (!matched) {
    std::set<std::string> available(keys.begin(), keys.end());
    std::string list;
    for (const auto& a : available) list += (list.empty() ? "" : ", ") + a;
    throw DataError("no rows for '" + value + "'; available: " + list);
  }
  if (sums.empty()) throw DataError("column '" + column + "' has no values for '" + value + "'");

  Series out;
  const long first = sums.begin()->first;
  const long last = sums.rbegin()->first;
  auto prev = sums.begin();
  for (long d = first; d <= last; ++d) {
    out.dates.push_back(Date::from_days(d));
    auto it = sums.find(d);
    if (it != sums.end()) {
      out.values.push_back(it->second.first / static_cast<double>(it->second.second));
      prev = it;
      continue;
    }
    const auto next = sums.upper_bound(d);
    const double y0 = prev->second.first / static_cast<double>(prev->second.second);
    const double y1 = next->second.first / static_cast<double>(next->second.second);
    const double w = static_cast<double>(d - prev->first) / static_cast<double>(next->first - prev->first);
    out.values.push_back(y0 + w * (y1 - y0));
    ++out.interpolated;
  }
  return out;
}

Series monthly_means(const Series& daily) {
  Series out;
  std::size_t i = 0;
  while (i < daily.dates.size()) {
    const int year = daily.dates[i].year();
    const unsigned month = daily.dates[i].month();
    double sum = 0.0;
    std::size_t n = 0;
    for (; i < daily.dates.size() && daily.dates[i].year() == year && daily.dates[i].month() == month; ++i) {
      sum += daily.values[i];
      ++n;
    }
    out.dates.emplace_back(year, month, 1);
    out.values.push_back(sum / static_cast<double>(n));
  }
  return out;
}

}  // namespace aqicast::diagnostics
