#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace aqicast {

struct NelderMeadOptions {
  std::size_t max_iterations = 2000;
  /// Converged once every vertex lies within this max-norm distance of the best
  /// one and the objective values across the simplex differ by less than
  /// value_tolerance. Both must hold.
  double size_tolerance = 1e-8;
  double value_tolerance = 1e-10;
  /// Initial edge length for coordinates that start at zero; others use 5% of |x0_i|.
  double zero_step = 0.1;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Derivative-free simplex minimizer. Non-finite objective values are treated as +inf.
/// Running out of iterations is not an error: the best vertex is returned with converged=false.
NelderMeadResult nelder_mead(const Objective& f, std::span<const double> x0, const NelderMeadOptions& options = {});

}  // namespace aqicast
