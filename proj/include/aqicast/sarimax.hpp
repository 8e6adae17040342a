#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aqicast/optimize.hpp"

namespace aqicast::sarimax {

/// Orders of a seasonal ARIMA model (p,d,q)(P,D,Q,m) plus exogenous column names.
struct SarimaSpec {
  std::size_t p = 0, d = 0, q = 0;
  std::size_t P = 0, D = 0, Q = 0;
  std::size_t m = 12;
  std::vector<std::string> exog;

  /// Throws ConfigError when m is zero, or m == 1 with any seasonal order.
  void validate() const;
  bool seasonal() const { return P + D + Q > 0; }
  std::size_t differencing_lag() const { return d + D * m; }
  std::size_t burn_in() const;
  /// intercept + p + q + P + Q + exog
  std::size_t parameter_count() const;
  std::string to_string() const;
  nlohmann::json to_json() const;
};

/// Parameter vector layout used by css_objective:
/// [intercept, phi_1..phi_p, theta_1..theta_q, Phi_1..Phi_P, Theta_1..Theta_Q, beta_1..beta_k].
struct SarimaParams {
  double intercept = 0.0;
  std::vector<double> ar, ma, seasonal_ar, seasonal_ma, beta;

  static SarimaParams unpack(std::span<const double> x, const SarimaSpec& spec);
  std::vector<double> pack() const;
};

/// Applies (1-B)^d (1-B^m)^D.
std::vector<double> difference(std::span<const double> series, std::size_t d, std::size_t D, std::size_t m);

/// Inverse of difference, given the first d + D*m original values.
std::vector<double> integrate(std::span<const double> differenced, std::span<const double> anchors, std::size_t d,
                              std::size_t D, std::size_t m);

/// Coefficients c_1..c_s of (1-B)^d (1-B^m)^D = 1 - sum c_k B^k.
std::vector<double> differencing_polynomial(std::size_t d, std::size_t D, std::size_t m);

/// One-step residuals of the differenced series (zeros through the burn-in).
/// Exogenous columns are given already differenced, one vector per column.
std::vector<double> css_residuals(std::span<const double> params, std::span<const double> w,
                                  const std::vector<std::vector<double>>& exog, const SarimaSpec& spec);

/// Sum of squared residuals past the burn-in; +inf for non-finite parameters or residuals.
double css_objective(std::span<const double> params, std::span<const double> w,
                     const std::vector<std::vector<double>>& exog, const SarimaSpec& spec);

/// True when every root of 1 - sum a_k z^k has modulus above `bound`.
bool roots_outside(std::span<const double> a, double bound = 1.001);

struct SarimaFit {
  SarimaSpec spec;
  SarimaParams params;
  double sigma2 = 0.0;
  bool converged = false;
  double objective = 0.0;
  std::size_t iterations = 0;
  std::size_t n_effective = 0;

  /// Original (undifferenced) series and exogenous history kept for forecasting.
  std::vector<double> series;
  std::vector<std::vector<double>> exog;
  /// One-step residuals on the differenced scale.
  std::vector<double> residuals;

  nlohmann::json to_json() const;
};

struct FitOptions {
  NelderMeadOptions optimizer{};
  /// Extra optimizer runs started from the previous optimum.
  std::size_t restarts = 2;
};

/// Conditional-sum-of-squares fit. exog holds one full-length vector per spec.exog entry.
SarimaFit fit_sarimax(std::span<const double> series, const std::vector<std::vector<double>>& exog,
                      const SarimaSpec& spec, const FitOptions& options = {});

struct Forecast {
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
};

/// exog_future: one vector of length `steps` per exogenous column.
Forecast forecast(const SarimaFit& fit, std::size_t steps, const std::vector<std::vector<double>>& exog_future = {});

/// psi weights of the full (differenced) model, psi_0 = 1.
std::vector<double> psi_weights(const SarimaFit& fit, std::size_t count);

}  // namespace aqicast::sarimax
