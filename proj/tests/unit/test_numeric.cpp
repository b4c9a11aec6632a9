#include <gtest/gtest.h>

#include "gridcast/error.hpp"
#include "gridcast/numeric.hpp"

#include <cmath>
#include <numeric>

using namespace gridcast;

TEST(Softmax, UniformScores) {
  const auto p = softmax(std::vector<double>{0, 0, 0});
  for (double v : p) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LargeScoresDoNotOverflow) {
  const auto p = softmax(std::vector<double>{1000, 0});
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  EXPECT_NEAR(p[1], 0.0, 1e-15);
  EXPECT_TRUE(std::isfinite(p[0]) && std::isfinite(p[1]));
}

TEST(Softmax, TwoScoresByHand) {
  const auto p = softmax(std::vector<double>{1, 2});
  const double e = std::exp(1.0);
  EXPECT_NEAR(p[0], 1.0 / (1.0 + e), 1e-15);
  EXPECT_NEAR(p[0], 0.26894, 1e-5);
  EXPECT_NEAR(p[1], 0.73106, 1e-5);
}

TEST(Softmax, RejectsEmptyAndNan) {
  EXPECT_THROW(softmax(std::vector<double>{}), std::exception);
  EXPECT_THROW(softmax(std::vector<double>{1.0, std::nan("")}), std::exception);
}

TEST(Softmax, SumsToOneAndIsShiftInvariant) {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(20);
    const double scale = trial % 3 == 0 ? 500.0 : 5.0;
    std::vector<double> s(n);
    for (double& v : s) v = rng.uniform(-scale, scale);
    const auto p = softmax(s);
    double sum = 0;
    std::size_t arg_s = 0, arg_p = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_GE(p[i], 0.0);
      sum += p[i];
      if (s[i] > s[arg_s]) arg_s = i;
      if (p[i] > p[arg_p]) arg_p = i;
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
    ASSERT_EQ(arg_s, arg_p);
    const double c = rng.uniform(-100, 100);
    std::vector<double> shifted(s);
    for (double& v : shifted) v += c;
    const auto q = softmax(shifted);
    for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(Pearson, HandCases) {
  EXPECT_NEAR(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}), 1.0, 1e-15);
  EXPECT_NEAR(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -1.0, 1e-15);
  // mean x 2.5, mean y 2.75: sxy = 6.5, sxx = 5, syy = 8.75
  const double expected = 6.5 / std::sqrt(5.0 * 8.75);
  EXPECT_NEAR(pearson(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 3, 5}), expected, 1e-12);
  EXPECT_NEAR(expected, 0.98270, 1e-4);
}

TEST(Pearson, ZeroVarianceIsZero) {
  EXPECT_EQ(pearson(std::vector<double>{4, 4, 4}, std::vector<double>{1, 2, 3}), 0.0);
}

TEST(Pearson, Errors) {
  EXPECT_THROW(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), std::exception);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), std::exception);
}

TEST(Pearson, AffineImageHasUnitCorrelation) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(2 + rng.uniform_index(50));
    for (double& v : x) v = rng.normal();
    double a = rng.uniform(-10, 10);
    if (std::abs(a) < 1e-3) a = 1.0;
    const double b = rng.uniform(-10, 10);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
    const double r = pearson(x, y);
    ASSERT_LE(std::abs(r), 1.0);
    ASSERT_NEAR(r, a > 0 ? 1.0 : -1.0, 1e-10);
  }
}

TEST(FiniteDifference, Examples) {
  const auto sq = finite_difference_gradient([](std::span<const double> x) { return x[0] * x[0]; },
                                             std::vector<double>{3.0}, 1e-5);
  EXPECT_NEAR(sq[0], 6.0, 1e-6);
  const auto flat = finite_difference_gradient([](std::span<const double>) { return 7.0; },
                                               std::vector<double>{1, 2, 3}, 1e-5);
  for (double v : flat) EXPECT_EQ(v, 0.0);
  const auto prod = finite_difference_gradient([](std::span<const double> x) { return x[0] * x[1]; },
                                               std::vector<double>{2, 5}, 1e-5);
  EXPECT_NEAR(prod[0], 5.0, 1e-6);
  EXPECT_NEAR(prod[1], 2.0, 1e-6);
}

TEST(FiniteDifference, NonFiniteEvaluationThrows) {
  EXPECT_THROW(finite_difference_gradient([](std::span<const double> x) { return std::log(x[0]); },
                                          std::vector<double>{0.0}, 1e-5),
               NumericError);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(123), b(123);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  Rng c(123), d(123);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(c.uniform(), d.uniform());
    ASSERT_EQ(c.normal(), d.normal());
  }
}

TEST(Rng, DeriveIgnoresParentDraws) {
  Rng a(99), b(99);
  for (int i = 0; i < 37; ++i) b.next_u64();
  Rng ca = a.derive("child"), cb = b.derive("child");
  for (int i = 0; i < 100; ++i) ASSERT_EQ(ca.next_u64(), cb.next_u64());
  EXPECT_NE(a.derive("x").seed(), a.derive("y").seed());
}

TEST(Rng, DrawRanges) {
  Rng rng(1);
  double sum = 0, sq = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(rng.uniform_index(7), 7u);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.02);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Stats, MeanAndSampleSd) {
  const std::vector<double> x{2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(mean(x), 5.0);
  EXPECT_NEAR(sample_sd(x), std::sqrt(32.0 / 7.0), 1e-14);
  EXPECT_EQ(sample_sd(std::vector<double>{3}), 0.0);
}

TEST(Stats, MaxRelativeError) {
  EXPECT_NEAR(max_relative_error(std::vector<double>{1, 100}, std::vector<double>{1.1, 100}), 0.1 / 1.1, 1e-15);
  EXPECT_EQ(max_relative_error(std::vector<double>{0}, std::vector<double>{0}), 0.0);
}
