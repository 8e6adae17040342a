#include "aqicast/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "aqicast/error.hpp"

namespace aqicast {
namespace {

double guarded(const Objective& f, std::span<const double> x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, std::span<const double> x0, const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  if (n == 0) {
    return {{}, guarded(f, x0), 0, true};
  }
  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(x0.begin(), x0.end()));
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x0[i];
    simplex[i + 1][i] = xi != 0.0 ? xi * 1.05 : options.zero_step;
  }
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = guarded(f, simplex[i]);
  if (!std::isfinite(values[0])) throw ConfigError("objective is not finite at the starting point");

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);

  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> s(n + 1);
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s[i] = std::move(simplex[order[i]]);
      v[i] = values[order[i]];
    }
    simplex = std::move(s);
    values = std::move(v);
  };
  auto along = [&](double coef, std::vector<double>& out) {
    for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + coef * (centroid[j] - simplex[n][j]);
  };

  NelderMeadResult result;
  std::size_t it = 0;
  sort_simplex();
  for (;; ++it) {
    double size = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) size = std::max(size, std::abs(simplex[i][j] - simplex[0][j]));
    }
    const double spread = values[n] - values[0];
    if (size < options.size_tolerance && spread < options.value_tolerance) {
      result.converged = true;
      break;
    }
    if (it >= options.max_iterations) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    along(kReflect, trial);
    const double fr = guarded(f, trial);
    if (fr < values[0]) {
      along(kExpand, trial2);
      const double fe = guarded(f, trial2);
      if (fe < fr) {
        simplex[n] = trial2;
        values[n] = fe;
      } else {
        simplex[n] = trial;
        values[n] = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex[n] = trial;
      values[n] = fr;
    } else {
      // Outside contraction when the reflected point beats the worst, inside otherwise.
      const bool outside = fr < values[n];
      along(outside ? kContract : -kContract, trial2);
      const double fc = guarded(f, trial2);
      if (fc < (outside ? fr : values[n])) {
        simplex[n] = trial2;
        values[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            simplex[i][j] = simplex[0][j] + kShrink * (simplex[i][j] - simplex[0][j]);
          }
          values[i] = guarded(f, simplex[i]);
        }
      }
    }
    sort_simplex();
  }
  result.x = simplex[0];
  result.value = values[0];
  result.iterations = it;
  return result;
}

}  // namespace aqicast
