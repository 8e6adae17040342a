#include "aqicast/sarimax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "aqicast/error.hpp"

namespace aqicast::sarimax {

void SarimaSpec::validate() const {
  if (m == 0) throw ConfigError("seasonal period m must be at least 1");
  if (m == 1 && (P > 0 || D > 0 || Q > 0)) {
    throw ConfigError("seasonal orders require a seasonal period m > 1");
  }
}

std::size_t SarimaSpec::burn_in() const { return std::max(p + P * m, q + Q * m); }

std::size_t SarimaSpec::parameter_count() const { return 1 + p + q + P + Q + exog.size(); }

std::string SarimaSpec::to_string() const {
  std::ostringstream out;
  out << '(' << p << ',' << d << ',' << q << ")(" << P << ',' << D << ',' << Q << ',' << m << ')';
  return out.str();
}

nlohmann::json SarimaSpec::to_json() const {
  return {{"order", {p, d, q}}, {"seasonal_order", {P, D, Q, m}}, {"exog", exog}};
}

SarimaParams SarimaParams::unpack(std::span<const double> x, const SarimaSpec& spec) {
  if (x.size() != spec.parameter_count()) throw ConfigError("parameter vector has the wrong length");
  SarimaParams out;
  std::size_t k = 0;
  auto take = [&](std::size_t count) {
    std::vector<double> v(x.begin() + static_cast<std::ptrdiff_t>(k), x.begin() + static_cast<std::ptrdiff_t>(k + count));
    k += count;
    return v;
  };
  out.intercept = x[k++];
  out.ar = take(spec.p);
  out.ma = take(spec.q);
  out.seasonal_ar = take(spec.P);
  out.seasonal_ma = take(spec.Q);
  out.beta = take(spec.exog.size());
  return out;
}

std::vector<double> SarimaParams::pack() const {
  std::vector<double> x{intercept};
  for (const auto* part : {&ar, &ma, &seasonal_ar, &seasonal_ma, &beta}) x.insert(x.end(), part->begin(), part->end());
  return x;
}

std::vector<double> difference(std::span<const double> series, std::size_t d, std::size_t D, std::size_t m) {
  if (m == 0) throw ConfigError("seasonal period m must be at least 1");
  if (series.size() <= d + D * m) {
    throw DataError("series of length " + std::to_string(series.size()) + " is too short to difference with d=" +
                    std::to_string(d) + ", D=" + std::to_string(D) + ", m=" + std::to_string(m));
  }
  std::vector<double> w(series.begin(), series.end());
  auto lag_diff = [&](std::size_t lag) {
    std::vector<double> next(w.size() - lag);
    for (std::size_t t = lag; t < w.size(); ++t) next[t - lag] = w[t] - w[t - lag];
    w = std::move(next);
  };
  for (std::size_t i = 0; i < d; ++i) lag_diff(1);
  for (std::size_t i = 0; i < D; ++i) lag_diff(m);
  return w;
}

std::vector<double> differencing_polynomial(std::size_t d, std::size_t D, std::size_t m) {
  // Full polynomial with constant term, multiplied out factor by factor.
  std::vector<double> poly{1.0};
  auto multiply = [&](std::size_t lag) {
    std::vector<double> next(poly.size() + lag, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += poly[i];
      next[i + lag] -= poly[i];
    }
    poly = std::move(next);
  };
  for (std::size_t i = 0; i < d; ++i) multiply(1);
  for (std::size_t i = 0; i < D; ++i) multiply(m);
  std::vector<double> c(poly.size() - 1);
  for (std::size_t k = 1; k < poly.size(); ++k) c[k - 1] = -poly[k];
  return c;
}

std::vector<double> integrate(std::span<const double> differenced, std::span<const double> anchors, std::size_t d,
                              std::size_t D, std::size_t m) {
  const auto c = differencing_polynomial(d, D, m);
  if (anchors.size() != c.size()) {
    throw ConfigError("integration needs " + std::to_string(c.size()) + " anchor values, got " +
                      std::to_string(anchors.size()));
  }
  std::vector<double> y(anchors.begin(), anchors.end());
  y.reserve(anchors.size() + differenced.size());
  for (double w : differenced) {
    double v = w;
    const std::size_t t = y.size();
    for (std::size_t k = 1; k <= c.size(); ++k) v += c[k - 1] * y[t - k];
    y.push_back(v);
  }
  return y;
}

namespace {

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

/// AR side as 1 - sum a_k B^k with the additive seasonal terms folded in.
std::vector<double> combined_ar(const SarimaParams& p, std::size_t m) {
  std::vector<double> a(std::max(p.ar.size(), p.seasonal_ar.size() * m), 0.0);
  for (std::size_t i = 0; i < p.ar.size(); ++i) a[i] += p.ar[i];
  for (std::size_t J = 0; J < p.seasonal_ar.size(); ++J) a[(J + 1) * m - 1] += p.seasonal_ar[J];
  return a;
}

/// MA side as 1 + sum b_k B^k.
std::vector<double> combined_ma(const SarimaParams& p, std::size_t m) {
  std::vector<double> b(std::max(p.ma.size(), p.seasonal_ma.size() * m), 0.0);
  for (std::size_t j = 0; j < p.ma.size(); ++j) b[j] += p.ma[j];
  for (std::size_t J = 0; J < p.seasonal_ma.size(); ++J) b[(J + 1) * m - 1] += p.seasonal_ma[J];
  return b;
}

double one_step(const SarimaParams& p, const SarimaSpec& spec, const std::vector<double>& w,
                const std::vector<double>& e, const std::vector<std::vector<double>>& exog, std::size_t t) {
  double v = p.intercept;
  for (std::size_t i = 1; i <= spec.p; ++i) v += p.ar[i - 1] * w[t - i];
  for (std::size_t J = 1; J <= spec.P; ++J) v += p.seasonal_ar[J - 1] * w[t - J * spec.m];
  for (std::size_t j = 1; j <= spec.q; ++j) v += p.ma[j - 1] * e[t - j];
  for (std::size_t J = 1; J <= spec.Q; ++J) v += p.seasonal_ma[J - 1] * e[t - J * spec.m];
  for (std::size_t k = 0; k < exog.size(); ++k) v += p.beta[k] * exog[k][t];
  return v;
}

void check_exog(const std::vector<std::vector<double>>& exog, const SarimaSpec& spec, std::size_t n,
                const char* what) {
  if (exog.size() != spec.exog.size()) {
    throw ConfigError(std::string(what) + ": expected " + std::to_string(spec.exog.size()) +
                      " exogenous columns, got " + std::to_string(exog.size()));
  }
  for (std::size_t k = 0; k < exog.size(); ++k) {
    if (exog[k].size() != n) {
      throw DataError(std::string(what) + ": exogenous column '" + spec.exog[k] + "' has length " +
                      std::to_string(exog[k].size()) + ", expected " + std::to_string(n));
    }
    if (!all_finite(exog[k])) throw DataError("exogenous column '" + spec.exog[k] + "' has non-finite values");
  }
}

}  // namespace

std::vector<double> css_residuals(std::span<const double> params, std::span<const double> w,
                                  const std::vector<std::vector<double>>& exog, const SarimaSpec& spec) {
  const SarimaParams p = SarimaParams::unpack(params, spec);
  const std::vector<double> wv(w.begin(), w.end());
  std::vector<double> e(w.size(), 0.0);
  for (std::size_t t = spec.burn_in(); t < w.size(); ++t) e[t] = wv[t] - one_step(p, spec, wv, e, exog, t);
  return e;
}

double css_objective(std::span<const double> params, std::span<const double> w,
                     const std::vector<std::vector<double>>& exog, const SarimaSpec& spec) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (!all_finite(params)) return kInf;
  const auto e = css_residuals(params, w, exog, spec);
  double ssr = 0.0;
  for (std::size_t t = spec.burn_in(); t < e.size(); ++t) ssr += e[t] * e[t];
  return std::isfinite(ssr) ? ssr : kInf;
}

bool roots_outside(std::span<const double> a, double bound) {
  std::size_t k = a.size();
  while (k > 0 && a[k - 1] == 0.0) --k;
  if (k == 0) return true;
  if (!all_finite(a.first(k))) return false;
  // Reciprocal roots are the eigenvalues of the companion matrix.
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) companion(0, static_cast<Eigen::Index>(j)) = a[j];
  for (std::size_t i = 1; i < k; ++i) companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) return false;
  return solver.eigenvalues().cwiseAbs().maxCoeff() < 1.0 / bound;
}

nlohmann::json SarimaFit::to_json() const {
  return {{"spec", spec.to_json()},
          {"intercept", params.intercept},
          {"ar", params.ar},
          {"ma", params.ma},
          {"seasonal_ar", params.seasonal_ar},
          {"seasonal_ma", params.seasonal_ma},
          {"beta", params.beta},
          {"sigma2", sigma2},
          {"converged", converged},
          {"objective", objective},
          {"iterations", iterations},
          {"n_effective", n_effective}};
}

SarimaFit fit_sarimax(std::span<const double> series, const std::vector<std::vector<double>>& exog,
                      const SarimaSpec& spec, const FitOptions& options) {
  spec.validate();
  const std::size_t n = series.size();
  check_exog(exog, spec, n, "fit");
  if (!all_finite(series)) throw DataError("series contains missing or non-finite values");
  const std::size_t needed = 10 * (spec.p + spec.q + spec.P + spec.Q + 2);
  if (n < needed) {
    throw DataError("series of length " + std::to_string(n) + " is too short for " + spec.to_string() + "; need at least " +
                    std::to_string(needed));
  }
  const auto w = difference(series, spec.d, spec.D, spec.m);
  std::vector<std::vector<double>> xw;
  for (const auto& col : exog) xw.push_back(difference(col, spec.d, spec.D, spec.m));
  const std::size_t burn = spec.burn_in();
  if (w.size() <= burn) {
    throw DataError("differenced series of length " + std::to_string(w.size()) + " does not exceed the burn-in of " +
                    std::to_string(burn));
  }

  const Objective penalized = [&](std::span<const double> x) {
    const SarimaParams p = SarimaParams::unpack(x, spec);
    if (!roots_outside(combined_ar(p, spec.m))) return std::numeric_limits<double>::infinity();
    auto b = combined_ma(p, spec.m);
    for (double& v : b) v = -v;
    if (!roots_outside(b)) return std::numeric_limits<double>::infinity();
    return css_objective(x, w, xw, spec);
  };

  std::vector<double> x0(spec.parameter_count(), 0.0);
  double mean = 0.0;
  for (double v : w) mean += v;
  x0[0] = mean / static_cast<double>(w.size());

  NelderMeadResult best = nelder_mead(penalized, x0, options.optimizer);
  std::size_t iterations = best.iterations;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    NelderMeadResult again = nelder_mead(penalized, best.x, options.optimizer);
    iterations += again.iterations;
    const bool improved = again.value < best.value;
    if (again.value <= best.value) best = std::move(again);
    if (!improved) break;
  }

  SarimaFit fit;
  fit.spec = spec;
  fit.params = SarimaParams::unpack(best.x, spec);
  fit.objective = css_objective(best.x, w, xw, spec);
  fit.converged = best.converged;
  fit.iterations = iterations;
  fit.n_effective = w.size() - burn;
  fit.sigma2 = fit.objective / static_cast<double>(fit.n_effective);
  fit.series.assign(series.begin(), series.end());
  fit.exog = exog;
  fit.residuals = css_residuals(best.x, w, xw, spec);
  return fit;
}

std::vector<double> psi_weights(const SarimaFit& fit, std::size_t count) {
  const auto a = combined_ar(fit.params, fit.spec.m);
  const auto c = differencing_polynomial(fit.spec.d, fit.spec.D, fit.spec.m);
  // (1 - sum a B)(1 - sum c B) written as 1 - sum star B.
  std::vector<double> full(a.size() + c.size() + 1, 0.0);
  std::vector<double> pa(a.size() + 1), pc(c.size() + 1);
  pa[0] = pc[0] = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) pa[i + 1] = -a[i];
  for (std::size_t i = 0; i < c.size(); ++i) pc[i + 1] = -c[i];
  for (std::size_t i = 0; i < pa.size(); ++i) {
    for (std::size_t j = 0; j < pc.size(); ++j) full[i + j] += pa[i] * pc[j];
  }
  const auto b = combined_ma(fit.params, fit.spec.m);
  std::vector<double> psi(count, 0.0);
  for (std::size_t j = 0; j < count; ++j) {
    double v = j == 0 ? 1.0 : (j <= b.size() ? b[j - 1] : 0.0);
    for (std::size_t k = 1; k <= j && k < full.size(); ++k) v += -full[k] * psi[j - k];
    psi[j] = v;
  }
  return psi;
}

Forecast forecast(const SarimaFit& fit, std::size_t steps, const std::vector<std::vector<double>>& exog_future) {
  const SarimaSpec& spec = fit.spec;
  check_exog(exog_future, spec, steps, "forecast");
  Forecast out;
  if (steps == 0) return out;

  auto w = difference(fit.series, spec.d, spec.D, spec.m);
  const std::size_t n = w.size();
  std::vector<std::vector<double>> xw;
  for (std::size_t k = 0; k < spec.exog.size(); ++k) {
    std::vector<double> joined = fit.exog[k];
    joined.insert(joined.end(), exog_future[k].begin(), exog_future[k].end());
    xw.push_back(difference(joined, spec.d, spec.D, spec.m));
  }
  std::vector<double> e = fit.residuals;
  w.resize(n + steps);
  e.resize(n + steps, 0.0);
  for (std::size_t t = n; t < n + steps; ++t) w[t] = one_step(fit.params, spec, w, e, xw, t);

  const auto c = differencing_polynomial(spec.d, spec.D, spec.m);
  std::vector<double> y = fit.series;
  for (std::size_t t = n; t < n + steps; ++t) {
    double v = w[t];
    const std::size_t i = y.size();
    for (std::size_t k = 1; k <= c.size(); ++k) v += c[k - 1] * y[i - k];
    y.push_back(v);
    out.mean.push_back(v);
  }

  const auto psi = psi_weights(fit, steps);
  const double sigma = std::sqrt(std::max(fit.sigma2, 0.0));
  double cumulative = 0.0;
  for (std::size_t h = 0; h < steps; ++h) {
    cumulative += psi[h] * psi[h];
    const double half = 1.96 * sigma * std::sqrt(cumulative);
    out.lower.push_back(out.mean[h] - half);
    out.upper.push_back(out.mean[h] + half);
  }
  return out;
}

}  // namespace aqicast::sarimax
