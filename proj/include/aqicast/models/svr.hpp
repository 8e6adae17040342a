#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aqicast/models/matrix.hpp"

namespace aqicast::models {

struct SvrParams {
  double C = 100.0;
  double epsilon = 0.1;
  /// RBF width; nullopt means 1 / n_features.
  std::optional<double> gamma;
  /// Stop when the maximal violating pair gap drops below this.
  double tolerance = 1e-3;
  /// nullopt means max(10'000'000, 100 n).
  std::optional<std::size_t> max_iterations;
  std::size_t cache_mb = 256;

  nlohmann::json to_json() const;
  static SvrParams from_json(const nlohmann::json& doc);
  void validate() const;
};

struct SvrModel {
  FeatureSchema schema;
  SvrParams params;
  double gamma = 0.0;
  Matrix support_vectors;
  /// alpha_i - alpha_i^* for each support vector.
  std::vector<double> dual_coef;
  /// Training-row index of each support vector.
  std::vector<std::size_t> support_indices;
  double bias = 0.0;
  /// 1/2 b'Kb - y'b + eps sum|b| at the solution.
  double objective = 0.0;
  std::size_t iterations = 0;
  std::size_t n_train = 0;
  std::vector<std::string> warnings;

  double predict_row(std::span<const double> x) const;
  std::vector<double> predict(const Matrix& X) const;
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// epsilon-insensitive SVR. Solves the dual over (alpha, alpha^*) with
/// maximal-violating-pair SMO and second-order working-set selection.
/// Throws ConvergenceError (carrying the pair gap) when max_iterations runs out.
SvrModel fit_svr(const FeatureFrame& frame, std::span<const double> y, const SvrParams& params = {});

/// Largest complementary-slackness violation over training points, measured
/// on the residual scale: zero coefficients need |r| <= eps, free ones |r| = eps,
/// bounded ones |r| >= eps, with the residual sign matching the coefficient.
double svr_kkt_violation(const SvrModel& model, const Matrix& X, std::span<const double> y);

}  // namespace aqicast::models
