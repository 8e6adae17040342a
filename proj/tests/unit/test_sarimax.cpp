#include <gtest/gtest.h>

#include <cmath>

#include "aqicast/error.hpp"
#include "aqicast/random.hpp"
#include "aqicast/sarimax.hpp"
#include "aqicast/stats.hpp"

using namespace aqicast;
using namespace aqicast::sarimax;

namespace {

std::vector<double> simulate_ar(std::size_t n, double phi, std::size_t lag, double c, std::uint64_t seed,
                                std::size_t burn = 200) {
  Rng rng(seed);
  std::vector<double> x(n + burn, 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = c + (t >= lag ? phi * x[t - lag] : 0.0) + rng.normal();
  return {x.begin() + static_cast<long>(burn), x.end()};
}

std::vector<double> simulate_ma1(std::size_t n, double theta, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  double prev = 0.0;
  for (auto& v : x) {
    const double e = rng.normal();
    v = e + theta * prev;
    prev = e;
  }
  return x;
}

SarimaSpec spec_of(std::size_t p, std::size_t d, std::size_t q, std::size_t P = 0, std::size_t D = 0,
                   std::size_t Q = 0, std::size_t m = 12) {
  SarimaSpec s;
  s.p = p;
  s.d = d;
  s.q = q;
  s.P = P;
  s.D = D;
  s.Q = Q;
  s.m = m;
  return s;
}

}  // namespace

TEST(SarimaSpec, Validation) {
  EXPECT_THROW(spec_of(1, 0, 0, 0, 0, 0, 0).validate(), ConfigError);
  EXPECT_THROW(spec_of(0, 0, 0, 1, 0, 0, 1).validate(), ConfigError);
  EXPECT_NO_THROW(spec_of(1, 1, 1, 0, 0, 0, 1).validate());
  const auto s = spec_of(2, 1, 1, 1, 1, 1, 7);
  EXPECT_EQ(s.burn_in(), 9u);
  EXPECT_EQ(s.parameter_count(), 6u);
  EXPECT_EQ(s.differencing_lag(), 8u);
}

TEST(Difference, Examples) {
  EXPECT_EQ(difference(std::vector<double>{1, 3, 6, 10}, 1, 0, 1), (std::vector<double>{2, 3, 4}));
  std::vector<double> pattern;
  for (int k = 0; k < 5; ++k) pattern.insert(pattern.end(), {3.0, 1.0, 4.0, 1.5});
  for (double v : difference(pattern, 0, 1, 4)) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(difference(pattern, 0, 1, 4).size(), 16u);
  EXPECT_THROW(difference(std::vector<double>{1, 2}, 2, 0, 1), DataError);
  EXPECT_EQ(differencing_polynomial(1, 1, 4), (std::vector<double>{1, 0, 0, 1, -1}));
  EXPECT_EQ(differencing_polynomial(2, 0, 1), (std::vector<double>{2, -1}));
}

TEST(Difference, IntegrateRoundTrip) {
  Rng rng(4);
  for (std::size_t d = 0; d <= 2; ++d) {
    for (std::size_t D = 0; D <= 2; ++D) {
      for (std::size_t m : {2u, 4u, 7u, 12u}) {
        const std::size_t lag = d + D * m;
        const std::size_t n = 2 * lag + 10;
        std::vector<double> ints(n), reals(n);
        for (std::size_t i = 0; i < n; ++i) {
          ints[i] = static_cast<double>(static_cast<int>(rng.below(200)) - 100);
          reals[i] = rng.normal() * 50.0;
        }
        const auto anchors = std::span<const double>(ints).first(lag);
        EXPECT_EQ(integrate(difference(ints, d, D, m), anchors, d, D, m), ints) << d << D << m;
        const auto back = integrate(difference(reals, d, D, m), std::span<const double>(reals).first(lag), d, D, m);
        ASSERT_EQ(back.size(), n);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(back[i], reals[i], 1e-9);
      }
    }
  }
  EXPECT_THROW(integrate(std::vector<double>{1.0}, std::vector<double>{}, 1, 0, 1), ConfigError);
}

TEST(Css, ZeroParamsGiveSumOfSquares) {
  Rng rng(1);
  std::vector<double> w(100);
  for (auto& v : w) v = rng.normal();
  const auto spec = spec_of(2, 0, 1);
  const std::vector<double> zero(spec.parameter_count(), 0.0);
  double want = 0.0;
  for (std::size_t t = spec.burn_in(); t < w.size(); ++t) want += w[t] * w[t];
  EXPECT_NEAR(css_objective(zero, w, {}, spec), want, 1e-12);
}

TEST(Css, TruthBeatsZero) {
  const auto x = simulate_ar(300, 0.8, 1, 0.0, 3);
  const auto spec = spec_of(1, 0, 0);
  EXPECT_LT(css_objective(std::vector<double>{0.0, 0.8}, x, {}, spec),
            css_objective(std::vector<double>{0.0, 0.0}, x, {}, spec));
}

TEST(Css, PerfectRegressor) {
  const auto x = simulate_ar(100, 0.5, 1, 2.0, 5);
  auto spec = spec_of(0, 0, 0);
  spec.exog = {"copy"};
  EXPECT_NEAR(css_objective(std::vector<double>{0.0, 1.0}, x, {x}, spec), 0.0, 1e-20);
}

TEST(Css, NonFiniteParamsGiveInfinity) {
  const auto x = simulate_ar(50, 0.5, 1, 0.0, 5);
  const auto spec = spec_of(1, 0, 0);
  EXPECT_TRUE(std::isinf(css_objective(std::vector<double>{0.0, std::nan("")}, x, {}, spec)));
  EXPECT_TRUE(std::isinf(css_objective(std::vector<double>{INFINITY, 0.1}, x, {}, spec)));
}

TEST(Css, ResidualsMatchHandRecursion) {
  const std::vector<double> w{1.0, 2.0, 0.5, -1.0, 3.0, 2.5};
  const auto spec = spec_of(1, 0, 1);
  const std::vector<double> params{0.2, 0.5, -0.3};
  const auto e = css_residuals(params, w, {}, spec);
  std::vector<double> want(w.size(), 0.0);
  for (std::size_t t = 1; t < w.size(); ++t) want[t] = w[t] - 0.2 - 0.5 * w[t - 1] + 0.3 * want[t - 1];
  for (std::size_t t = 0; t < w.size(); ++t) EXPECT_NEAR(e[t], want[t], 1e-15);
}

TEST(Roots, StationarityRegion) {
  EXPECT_TRUE(roots_outside(std::vector<double>{0.5}));
  EXPECT_FALSE(roots_outside(std::vector<double>{1.0}));
  EXPECT_FALSE(roots_outside(std::vector<double>{-1.2}));
  EXPECT_TRUE(roots_outside(std::vector<double>{0.5, 0.3}));
  EXPECT_FALSE(roots_outside(std::vector<double>{0.5, 0.6}));
  EXPECT_TRUE(roots_outside(std::vector<double>{}));
  EXPECT_TRUE(roots_outside(std::vector<double>{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0.9}));
  EXPECT_FALSE(roots_outside(std::vector<double>{0.9995}));
}

TEST(Fit, RecoversAr1) {
  const auto x = simulate_ar(500, 0.8, 1, 0.0, 2024);
  const auto fit = fit_sarimax(x, {}, spec_of(1, 0, 0));
  ASSERT_EQ(fit.params.ar.size(), 1u);
  EXPECT_GE(fit.params.ar[0], 0.7);
  EXPECT_LE(fit.params.ar[0], 0.9);
  EXPECT_TRUE(fit.converged);
  EXPECT_GE(fit.sigma2, 0.0);
  EXPECT_NEAR(fit.sigma2, 1.0, 0.2);
}

TEST(Fit, RecoversSeasonalAr) {
  const auto x = simulate_ar(600, 0.5, 12, 0.0, 77);
  const auto fit = fit_sarimax(x, {}, spec_of(0, 0, 0, 1, 0, 0, 12));
  ASSERT_EQ(fit.params.seasonal_ar.size(), 1u);
  EXPECT_GE(fit.params.seasonal_ar[0], 0.35);
  EXPECT_LE(fit.params.seasonal_ar[0], 0.65);
}

TEST(Fit, RecoversMa1) {
  const auto x = simulate_ma1(800, 0.5, 9);
  const auto fit = fit_sarimax(x, {}, spec_of(0, 0, 1));
  EXPECT_NEAR(fit.params.ma[0], 0.5, 0.1);
}

TEST(Fit, ObjectiveIsReproducibleAndNoWorseThanStart) {
  const auto x = simulate_ar(300, 0.6, 1, 5.0, 8);
  const auto spec = spec_of(1, 1, 1);
  const auto fit = fit_sarimax(x, {}, spec);
  const auto w = difference(x, 1, 0, 12);
  EXPECT_NEAR(fit.objective, css_objective(fit.params.pack(), w, {}, spec), 1e-9);
  std::vector<double> start(spec.parameter_count(), 0.0);
  start[0] = stats::mean(w);
  EXPECT_LE(fit.objective, css_objective(start, w, {}, spec));
  EXPECT_TRUE(roots_outside(fit.params.ar));
  EXPECT_EQ(fit_sarimax(x, {}, spec).to_json().dump(), fit.to_json().dump());
}

TEST(Fit, ExogenousCoefficient) {
  Rng rng(12);
  std::vector<double> z(400), y(400);
  for (std::size_t t = 0; t < z.size(); ++t) {
    z[t] = 50.0 + 10.0 * rng.normal();
    y[t] = 3.0 + 2.0 * z[t] + rng.normal();
  }
  auto spec = spec_of(0, 0, 0);
  spec.exog = {"z"};
  const auto fit = fit_sarimax(y, {z}, spec);
  EXPECT_NEAR(fit.params.beta[0], 2.0, 0.02);
  EXPECT_THROW(fit_sarimax(y, {}, spec), ConfigError);
  EXPECT_THROW(fit_sarimax(y, {std::vector<double>(10, 1.0)}, spec), DataError);
}

TEST(Fit, TooShortIsDataError) {
  EXPECT_THROW(fit_sarimax(std::vector<double>(39, 1.0), {}, spec_of(1, 0, 1)), DataError);
  std::vector<double> bad(100, 1.0);
  bad[5] = std::nan("");
  EXPECT_THROW(fit_sarimax(bad, {}, spec_of(0, 0, 0)), DataError);
}

TEST(Forecast, InterceptOnlyModel) {
  const auto x = simulate_ar(200, 0.0, 1, 7.0, 6);
  const auto fit = fit_sarimax(x, {}, spec_of(0, 0, 0));
  EXPECT_NEAR(fit.params.intercept, stats::mean(x), 1e-6);
  const auto fc = forecast(fit, 10);
  ASSERT_EQ(fc.mean.size(), 10u);
  for (std::size_t h = 0; h < 10; ++h) {
    EXPECT_EQ(fc.mean[h], fit.params.intercept);
    EXPECT_NEAR(fc.upper[h] - fc.lower[h], fc.upper[0] - fc.lower[0], 1e-12);
    EXPECT_NEAR(fc.upper[h] - fc.mean[h], 1.96 * std::sqrt(fit.sigma2), 1e-12);
  }
  EXPECT_TRUE(forecast(fit, 0).mean.empty());
}

TEST(Forecast, Ar1ClosedForm) {
  const auto x = simulate_ar(500, 0.7, 1, 3.0, 31);
  const auto fit = fit_sarimax(x, {}, spec_of(1, 0, 0));
  const double phi = fit.params.ar[0];
  const double mu = fit.params.intercept / (1.0 - phi);
  const auto fc = forecast(fit, 20);
  for (std::size_t h = 1; h <= 20; ++h) {
    EXPECT_NEAR(fc.mean[h - 1], mu + std::pow(phi, static_cast<double>(h)) * (x.back() - mu), 1e-9) << h;
  }
  const auto psi = psi_weights(fit, 5);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(psi[j], std::pow(phi, static_cast<double>(j)), 1e-12);
}

TEST(Forecast, RandomWalkWithDrift) {
  const auto x = simulate_ar(300, 1.0, 1, 0.5, 13, 0);
  const auto fit = fit_sarimax(x, {}, spec_of(0, 1, 0));
  const auto fc = forecast(fit, 5);
  for (std::size_t h = 1; h <= 5; ++h) {
    EXPECT_NEAR(fc.mean[h - 1], x.back() + static_cast<double>(h) * fit.params.intercept, 1e-9);
    const double half = 1.96 * std::sqrt(fit.sigma2 * static_cast<double>(h));
    EXPECT_NEAR(fc.upper[h - 1] - fc.mean[h - 1], half, 1e-9);
  }
}

TEST(Forecast, IntervalWidthNonDecreasing) {
  const auto ar = fit_sarimax(simulate_ar(400, 0.6, 1, 0.0, 3), {}, spec_of(2, 0, 0));
  const auto ma = fit_sarimax(simulate_ma1(400, 0.4, 3), {}, spec_of(0, 0, 2));
  for (const auto* fit : {&ar, &ma}) {
    const auto fc = forecast(*fit, 30);
    for (std::size_t h = 1; h < 30; ++h) {
      EXPECT_GE(fc.upper[h] - fc.lower[h], fc.upper[h - 1] - fc.lower[h - 1] - 1e-12);
    }
  }
}

TEST(Forecast, ExogFutureRequired) {
  Rng rng(2);
  std::vector<double> z(200), y(200);
  for (std::size_t t = 0; t < 200; ++t) {
    z[t] = rng.normal();
    y[t] = 1.0 + z[t] + rng.normal();
  }
  auto spec = spec_of(1, 0, 0);
  spec.exog = {"z"};
  const auto fit = fit_sarimax(y, {z}, spec);
  EXPECT_THROW(forecast(fit, 3), ConfigError);
  EXPECT_THROW(forecast(fit, 3, {{1.0, 2.0}}), DataError);
  const auto fc = forecast(fit, 3, {{1.0, 2.0, 3.0}});
  EXPECT_EQ(fc.mean.size(), 3u);
}

TEST(Forecast, SeasonalDifferencingCarriesPattern) {
  std::vector<double> x;
  Rng rng(5);
  for (int k = 0; k < 30; ++k) {
    for (double v : {10.0, 20.0, 15.0, 5.0}) x.push_back(v + 0.01 * rng.normal());
  }
  const auto fit = fit_sarimax(x, {}, spec_of(0, 0, 0, 0, 1, 0, 4));
  const auto fc = forecast(fit, 8);
  const double want[] = {10.0, 20.0, 15.0, 5.0};
  for (std::size_t h = 0; h < 8; ++h) EXPECT_NEAR(fc.mean[h], want[h % 4], 0.1);
}
