#include "aqicast/models/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include "aqicast/error.hpp"
#include "aqicast/json_util.hpp"
#include "aqicast/stats.hpp"

namespace aqicast::models {
namespace {

constexpr double kTau = 1e-12;

/// Lazily computed kernel rows with LRU eviction.
class KernelCache {
 public:
  KernelCache(const Matrix& X, double gamma, std::size_t budget_bytes) : X_(X), gamma_(gamma) {
    const std::size_t row_bytes = std::max<std::size_t>(1, X.rows() * sizeof(double));
    capacity_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
  }

  const std::vector<double>& row(std::size_t i) {
    auto it = index_.find(i);
    if (it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    std::vector<double> values(X_.rows());
    for (std::size_t j = 0; j < X_.rows(); ++j) values[j] = rbf_kernel(X_.row(i), X_.row(j), gamma_);
    lru_.emplace_front(i, std::move(values));
    index_[i] = lru_.begin();
    return lru_.front().second;
  }

 private:
  const Matrix& X_;
  double gamma_;
  std::size_t capacity_;
  std::list<std::pair<std::size_t, std::vector<double>>> lru_;
  std::unordered_map<std::size_t, std::list<std::pair<std::size_t, std::vector<double>>>::iterator> index_;
};

}  // namespace

nlohmann::json SvrParams::to_json() const {
  nlohmann::json doc{{"kernel", "rbf"}, {"C", C}, {"epsilon", epsilon}, {"tolerance", tolerance}};
  doc["gamma"] = gamma ? nlohmann::json(*gamma) : nlohmann::json(nullptr);
  if (max_iterations) doc["max_iterations"] = *max_iterations;
  return doc;
}

SvrParams SvrParams::from_json(const nlohmann::json& doc) {
  SvrParams p;
  for (const auto& [key, value] : doc.items()) {
    if (key == "C") {
      p.C = value.get<double>();
    } else if (key == "epsilon") {
      p.epsilon = value.get<double>();
    } else if (key == "gamma") {
      if (value.is_string()) {
        if (value.get<std::string>() != "auto") throw ConfigError("gamma must be a number or \"auto\"");
        p.gamma.reset();
      } else {
        p.gamma = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
      }
    } else if (key == "tolerance" || key == "tol") {
      p.tolerance = value.get<double>();
    } else if (key == "max_iterations" || key == "max_iter") {
      p.max_iterations = json_count(value, "svr parameter '" + key + "'");
    } else if (key == "cache_mb") {
      p.cache_mb = json_count(value, "svr parameter '" + key + "'");
    } else if (key == "kernel") {
      if (value.get<std::string>() != "rbf") throw ConfigError("only the rbf kernel is supported");
    } else {
      throw ConfigError("unknown svr parameter '" + key + "'");
    }
  }
  p.validate();
  return p;
}

void SvrParams::validate() const {
  if (!(C > 0.0)) throw ConfigError("C must be positive");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
  if (gamma && !(*gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

double SvrModel::predict_row(std::span<const double> x) const {
  double f = bias;
  for (std::size_t i = 0; i < dual_coef.size(); ++i) f += dual_coef[i] * rbf_kernel(support_vectors.row(i), x, gamma);
  return f;
}

std::vector<double> SvrModel::predict(const Matrix& X) const {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict_row(X.row(r));
  return out;
}

SvrModel fit_svr(const FeatureFrame& frame, std::span<const double> y, const SvrParams& params) {
  params.validate();
  const Matrix& X = frame.X;
  check_training_data(X, y);
  const std::size_t n = X.rows();
  const std::size_t m = 2 * n;
  const double C = params.C;

  SvrModel model;
  model.schema = frame.schema;
  model.params = params;
  model.gamma = params.gamma.value_or(1.0 / static_cast<double>(X.cols()));
  model.n_train = n;

  for (std::size_t f = 0; f < X.cols(); ++f) {
    std::vector<double> col(n);
    for (std::size_t r = 0; r < n; ++r) col[r] = X(r, f);
    const double sd = stats::population_std(col);
    if (sd > 10.0 || sd < 0.1) {
      model.warnings.push_back("feature '" + (f < frame.schema.names.size() ? frame.schema.names[f] : std::to_string(f)) +
                               "' has std " + std::to_string(sd) + "; SVR expects standardized features");
    }
  }

  // a[t] = alpha_t for t < n, alpha*_{t-n} otherwise; z is the +-1 sign.
  std::vector<double> a(m, 0.0), G(m), p(m);
  std::vector<int> z(m);
  for (std::size_t t = 0; t < n; ++t) {
    z[t] = 1;
    z[t + n] = -1;
    p[t] = params.epsilon - y[t];
    p[t + n] = params.epsilon + y[t];
  }
  G = p;
  KernelCache cache(X, model.gamma, params.cache_mb * 1024 * 1024);
  // RBF: K(x, x) = 1.
  const double kdiag = 1.0;

  const std::size_t max_iter = params.max_iterations.value_or(std::max<std::size_t>(10'000'000, 100 * n));
  std::size_t iter = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (;; ++iter) {
    // Maximal violating pair, second-order choice of j.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = m;
    for (std::size_t t = 0; t < m; ++t) {
      if (z[t] == 1) {
        if (a[t] < C && -G[t] >= gmax) {
          gmax = -G[t];
          i = t;
        }
      } else if (a[t] > 0 && G[t] >= gmax) {
        gmax = G[t];
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t j = m;
    double obj_min = std::numeric_limits<double>::infinity();
    const std::vector<double>* Ki = i < m ? &cache.row(i % n) : nullptr;
    for (std::size_t t = 0; t < m; ++t) {
      if (!Ki) break;
      const double Qit = static_cast<double>(z[i] * z[t]) * (*Ki)[t % n];
      if (z[t] == 1) {
        if (a[t] > 0) {
          const double grad_diff = gmax + G[t];
          if (G[t] >= gmax2) gmax2 = G[t];
          if (grad_diff > 0) {
            double quad = kdiag + kdiag - 2.0 * z[i] * Qit;
            if (quad <= 0) quad = kTau;
            const double obj_diff = -(grad_diff * grad_diff) / quad;
            if (obj_diff <= obj_min) {
              j = t;
              obj_min = obj_diff;
            }
          }
        }
      } else if (a[t] < C) {
        const double grad_diff = gmax - G[t];
        if (-G[t] >= gmax2) gmax2 = -G[t];
        if (grad_diff > 0) {
          double quad = kdiag + kdiag + 2.0 * z[i] * Qit;
          if (quad <= 0) quad = kTau;
          const double obj_diff = -(grad_diff * grad_diff) / quad;
          if (obj_diff <= obj_min) {
            j = t;
            obj_min = obj_diff;
          }
        }
      }
    }
    gap = gmax + gmax2;
    if (i == m || j == m || gap < params.tolerance) break;
    if (iter >= max_iter) {
      throw ConvergenceError("SVR solver did not converge in " + std::to_string(max_iter) +
                                 " iterations (KKT gap " + std::to_string(gap) + ")",
                             gap);
    }

    const std::vector<double> Ki_row = *Ki;  // copy: fetching row j may evict row i
    const std::vector<double>& Kj = cache.row(j % n);
    const double Kij = Ki_row[j % n];
    const double Qij = static_cast<double>(z[i] * z[j]) * Kij;
    const double old_ai = a[i], old_aj = a[j];

    if (z[i] != z[j]) {
      double quad = kdiag + kdiag + 2.0 * Qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) {
          a[j] = 0;
          a[i] = diff;
        }
      } else if (a[i] < 0) {
        a[i] = 0;
        a[j] = -diff;
      }
      if (diff > 0) {
        if (a[i] > C) {
          a[i] = C;
          a[j] = C - diff;
        }
      } else if (a[j] > C) {
        a[j] = C;
        a[i] = C + diff;
      }
    } else {
      double quad = kdiag + kdiag - 2.0 * Qij;
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) {
          a[i] = C;
          a[j] = sum - C;
        }
      } else if (a[j] < 0) {
        a[j] = 0;
        a[i] = sum;
      }
      if (sum > C) {
        if (a[j] > C) {
          a[j] = C;
          a[i] = sum - C;
        }
      } else if (a[i] < 0) {
        a[i] = 0;
        a[j] = sum;
      }
    }

    const double dai = a[i] - old_ai, daj = a[j] - old_aj;
    for (std::size_t t = 0; t < m; ++t) {
      const double Qit = static_cast<double>(z[i] * z[t]) * Ki_row[t % n];
      const double Qjt = static_cast<double>(z[j] * z[t]) * Kj[t % n];
      G[t] += Qit * dai + Qjt * daj;
    }
  }
  model.iterations = iter;

  // Bias from free variables; midpoint of the feasible interval otherwise.
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t free = 0;
  for (std::size_t t = 0; t < m; ++t) {
    const double yG = z[t] * G[t];
    if (a[t] >= C) {
      if (z[t] == -1) {
        ub = std::min(ub, yG);
      } else {
        lb = std::max(lb, yG);
      }
    } else if (a[t] <= 0) {
      if (z[t] == 1) {
        ub = std::min(ub, yG);
      } else {
        lb = std::max(lb, yG);
      }
    } else {
      ++free;
      sum_free += yG;
    }
  }
  const double rho = free > 0 ? sum_free / static_cast<double>(free) : (ub + lb) / 2.0;
  model.bias = -rho;

  double obj = 0.0;
  for (std::size_t t = 0; t < m; ++t) obj += a[t] * (G[t] + p[t]);
  model.objective = obj / 2.0;

  std::vector<std::size_t> sv;
  for (std::size_t t = 0; t < n; ++t) {
    const double beta = a[t] - a[t + n];
    if (beta != 0.0) {
      sv.push_back(t);
      model.dual_coef.push_back(beta);
      model.support_indices.push_back(t);
    }
  }
  model.support_vectors = X.take_rows(sv);
  return model;
}

double svr_kkt_violation(const SvrModel& model, const Matrix& X, std::span<const double> y) {
  if (X.rows() != model.n_train || y.size() != model.n_train) {
    throw DataError("KKT audit needs the training data the model was fitted on");
  }
  std::vector<double> full_dual_coef(model.n_train, 0.0);
  for (std::size_t k = 0; k < model.support_indices.size(); ++k) {
    full_dual_coef[model.support_indices[k]] = model.dual_coef[k];
  }
  const double C = model.params.C, eps = model.params.epsilon;
  const double bound_tol = 1e-9 * C;
  double worst = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double r = y[i] - model.predict_row(X.row(i));
    const double beta = full_dual_coef[i];
    double v = 0.0;
    if (std::abs(beta) <= bound_tol) {
      v = std::max(0.0, std::abs(r) - eps);
    } else {
      // Residual must sit on (free) or beyond (bounded) the tube edge matching the sign.
      const double signed_excess = (beta > 0 ? r : -r) - eps;
      v = std::abs(beta) >= C - bound_tol ? std::max(0.0, -signed_excess) : std::abs(signed_excess);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace aqicast::models
