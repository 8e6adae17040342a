#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <sstream>

#include "aqicast/csv.hpp"
#include "aqicast/date.hpp"
#include "aqicast/error.hpp"
#include "aqicast/optimize.hpp"
#include "aqicast/parallel.hpp"
#include "aqicast/random.hpp"
#include "aqicast/stats.hpp"
#include "test_util.hpp"

using namespace aqicast;

TEST(Date, ParsesBothFormats) {
  EXPECT_EQ(Date::parse("05-11-2021"), Date(2021, 11, 5));
  EXPECT_EQ(Date::parse("2021-11-05"), Date(2021, 11, 5));
  EXPECT_EQ(Date::parse(" 2021-11-05\r"), Date(2021, 11, 5));
  EXPECT_FALSE(Date::parse("2021-02-30"));
  EXPECT_FALSE(Date::parse("31/12/2021"));
  EXPECT_FALSE(Date::parse("2021-13-01"));
  EXPECT_FALSE(Date::parse(""));
}

TEST(Date, DayArithmeticRoundTrips) {
  const Date d(2020, 2, 28);
  EXPECT_EQ(Date::from_days(d.days_since_epoch() + 1), Date(2020, 2, 29));
  EXPECT_EQ(Date::from_days(d.days_since_epoch() + 2), Date(2020, 3, 1));
  EXPECT_EQ(Date(2022, 10, 1).iso(), "2022-10-01");
  EXPECT_LT(Date(2022, 9, 30), Date(2022, 10, 1));
}

TEST(Csv, SplitsQuotedFields) {
  const auto row = csv::split_line(R"(a,"b, c","say ""hi""",,x)");
  ASSERT_EQ(row.size(), 5u);
  EXPECT_EQ(row[1], "b, c");
  EXPECT_EQ(row[2], "say \"hi\"");
  EXPECT_EQ(row[3], "");
}

TEST(Csv, WriteThenReadRoundTrips) {
  testutil::TempDir dir("csv");
  const std::vector<csv::Row> rows{{"name", "note"}, {"Anand Vihar, Delhi", "line1\nline2"}, {"q\"uote", ""}};
  {
    std::ofstream out(dir / "t.csv", std::ios::binary);
    for (const auto& r : rows) csv::write_row(out, r);
  }
  EXPECT_EQ(csv::read_file(dir / "t.csv"), rows);
}

TEST(Csv, FormatDoubleIsShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 150.5, -2.5e-12, 123456789.125}) {
    EXPECT_EQ(std::stod(csv::format_double(v)), v);
  }
  EXPECT_EQ(csv::format_double(0.1), "0.1");
}

TEST(Rng, SameSeedSameStream) {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, SubstreamsDiffer) {
  auto a = Rng::substream(42, "forest", 0);
  auto b = Rng::substream(42, "forest", 1);
  auto c = Rng::substream(42, "booster", 0);
  const auto x = a.next_u64();
  EXPECT_NE(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
  EXPECT_EQ(x, Rng::substream(42, "forest", 0).next_u64());
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  Rng r(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = r.below(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Rng, NormalMoments) {
  Rng r(11);
  std::vector<double> x(20000);
  for (auto& v : x) v = r.normal();
  EXPECT_NEAR(stats::mean(x), 0.0, 0.03);
  EXPECT_NEAR(stats::sample_std(x), 1.0, 0.03);
}

TEST(Stats, QuantilesMatchNumpyLinear) {
  // numpy.percentile(lcg_noise(37, 5) * 100, [0, 10, 25, 50, 75, 90, 100])
  const double expected[] = {-46.99177169241011, -29.95564221404493, -18.816849403083324, 14.589568646624684,
                             30.920908227562904, 44.27898766472935,  49.40482014790177};
  auto x = testutil::lcg_noise(37, 5);
  for (auto& v : x) v *= 100.0;
  const double ps[] = {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0};
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(stats::quantile(x, ps[i]), expected[i], 1e-9) << ps[i];
  EXPECT_NEAR(stats::sample_std(x), 28.3791840205319, 1e-9);
}

TEST(Stats, StdConventions) {
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(stats::sample_std(x), std::sqrt(5.0 / 3.0));
  EXPECT_DOUBLE_EQ(stats::population_std(x), std::sqrt(1.25));
  EXPECT_DOUBLE_EQ(stats::sample_std(std::vector<double>{5.0}), 0.0);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(500);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 37) throw DataError("boom");
                            }),
               DataError);
}

TEST(NelderMead, QuadraticFromZero) {
  const auto r = nelder_mead([](std::span<const double> x) { return (x[0] - 3.0) * (x[0] - 3.0); },
                             std::vector<double>{0.0});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 3.0, 1e-4);
}

TEST(NelderMead, Rosenbrock) {
  const auto f = [](std::span<const double> x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  const auto r = nelder_mead(f, std::vector<double>{-1.2, 1.0});
  EXPECT_LT(r.value, 1e-6);
  EXPECT_NEAR(r.x[0], 1.0, 1e-3);
  EXPECT_NEAR(r.x[1], 1.0, 1e-3);
}

TEST(NelderMead, FlatObjectiveReturnsStart) {
  const auto r = nelder_mead([](std::span<const double>) { return 5.0; }, std::vector<double>{1.5, -2.0});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.value, 5.0);
  EXPECT_NEAR(r.x[0], 1.5, 0.1);
  EXPECT_NEAR(r.x[1], -2.0, 0.2);
}

TEST(NelderMead, IterationLimitIsNotAnError) {
  NelderMeadOptions opts;
  opts.max_iterations = 5;
  const auto f = [](std::span<const double> x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  const auto r = nelder_mead(f, std::vector<double>{-1.2, 1.0}, opts);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 5u);
  EXPECT_LT(r.value, f(std::vector<double>{-1.2, 1.0}));
}

TEST(NelderMead, InfiniteRegionsAreAvoided) {
  const auto f = [](std::span<const double> x) {
    return x[0] < 0.5 ? std::numeric_limits<double>::quiet_NaN() : (x[0] - 2.0) * (x[0] - 2.0);
  };
  const auto r = nelder_mead(f, std::vector<double>{1.0});
  EXPECT_NEAR(r.x[0], 2.0, 1e-4);
}
