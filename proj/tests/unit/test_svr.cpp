#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "gridcast/error.hpp"
#include "gridcast/svr.hpp"

#include <numeric>

using namespace gridcast;

namespace {

struct Problem {
  Matrix x;
  std::vector<double> y;
};

Problem random_problem(Rng& rng, std::size_t n, std::size_t d) {
  Problem p{Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d)), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < d; ++f) p.x(Eigen::Index(i), Eigen::Index(f)) = rng.uniform(-1, 1);
    p.y[i] = std::sin(2 * p.x(Eigen::Index(i), 0)) + 0.3 * rng.normal();
  }
  return p;
}

Eigen::MatrixXd kernel_matrix(const Matrix& x, KernelKind kind, double gamma) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto d = x.row(i) - x.row(j);
      k(i, j) = kind == KernelKind::rbf ? std::exp(-gamma * d.squaredNorm()) : x.row(i).dot(x.row(j));
    }
  }
  return k;
}

double predict_row(const SvrSolution& s, const Matrix& x, Eigen::Index r) {
  return s.predict({x.row(r).data(), std::size_t(x.cols())});
}

void expect_kkt(const SvrSolution& s, double C, double tol) {
  double sum = 0;
  for (std::size_t i = 0; i < s.alpha.size(); ++i) {
    EXPECT_GE(s.alpha[i], -tol);
    EXPECT_LE(s.alpha[i], C + tol);
    EXPECT_GE(s.alpha_star[i], -tol);
    EXPECT_LE(s.alpha_star[i], C + tol);
    EXPECT_LE(s.alpha[i] * s.alpha_star[i], tol);
    sum += s.alpha[i] - s.alpha_star[i];
  }
  EXPECT_NEAR(sum, 0.0, tol);
}

}  // namespace

TEST(Svr, TwoPointsOnIdentityLineLinearKernel) {
  Matrix x(2, 1);
  x << 1.0, 2.0;
  const std::vector<double> y{1.0, 2.0};
  SvrConfig c;
  c.kernel = KernelKind::linear;
  c.C = 100;
  c.epsilon = 0;
  const auto s = fit_svr(x, y, c);
  EXPECT_TRUE(s.converged);
  EXPECT_NEAR(predict_row(s, x, 0), 1.0, 1e-3);
  EXPECT_NEAR(predict_row(s, x, 1), 2.0, 1e-3);

  Eigen::Matrix2d K = kernel_matrix(x, KernelKind::linear, 0);
  double t = 0;
  const double oracle_obj = oracle::svr_two_point_grid(K, Eigen::Vector2d(1.0, 2.0), 100, 0, &t);
  EXPECT_NEAR(s.dual_objective, oracle_obj, 1e-6 * std::max(1.0, std::abs(oracle_obj)));
  EXPECT_NEAR(s.alpha[0] - s.alpha_star[0], t, 1e-3);
}

TEST(Svr, WideTubeGivesMeanPrediction) {
  Matrix x(5, 1);
  x << 0, 1, 2, 3, 4;
  const std::vector<double> y{1.0, 1.5, 2.0, 1.2, 1.8};
  SvrConfig c;
  c.epsilon = 1.0;  // larger than max |y - mean(y)| = 0.5
  const auto s = fit_svr(x, y, c);
  for (std::size_t i = 0; i < y.size(); ++i) {
    EXPECT_EQ(s.alpha[i], 0.0);
    EXPECT_EQ(s.alpha_star[i], 0.0);
  }
  EXPECT_TRUE(s.support_indices.empty());
  EXPECT_DOUBLE_EQ(s.bias, 1.5);
  for (Eigen::Index r = 0; r < x.rows(); ++r) EXPECT_DOUBLE_EQ(predict_row(s, x, r), 1.5);
}

TEST(Svr, DuplicatedTrainingPointWithinTube) {
  Rng rng(21);
  Problem p = random_problem(rng, 30, 2);
  SvrConfig c;
  c.C = 100;
  c.epsilon = 0.05;
  c.gamma = 2.0;
  const auto s = fit_svr(p.x, p.y, c);
  ASSERT_TRUE(s.converged);
  for (Eigen::Index r = 0; r < p.x.rows(); ++r) {
    // A point strictly inside the box sits on or inside the tube.
    if (s.alpha[std::size_t(r)] < c.C - 1e-9 && s.alpha_star[std::size_t(r)] < c.C - 1e-9) {
      EXPECT_LE(std::abs(predict_row(s, p.x, r) - p.y[std::size_t(r)]), c.epsilon + 1e-4);
    }
  }
}

TEST(Svr, MatchesActiveSetOracle) {
  Rng rng(22);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(6);
    Problem p = random_problem(rng, n, 2);
    SvrConfig c;
    c.C = rng.uniform(0.5, 5);
    c.epsilon = rng.uniform(0.0, 0.2);
    c.gamma = rng.uniform(0.5, 3);
    c.tol = 1e-10;
    const auto s = fit_svr(p.x, p.y, c);
    ASSERT_TRUE(s.converged);
    expect_kkt(s, c.C, 1e-8);
    const Eigen::MatrixXd K = kernel_matrix(p.x, KernelKind::rbf, c.gamma);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(p.y.data(), Eigen::Index(n));
    const auto o = oracle::svr_active_set(K, y, c.C, c.epsilon);
    ASSERT_TRUE(o.found) << "trial " << trial;
    EXPECT_NEAR(s.dual_objective, o.objective, 1e-4 * std::max(1.0, std::abs(o.objective))) << "trial " << trial;
  }
}

TEST(Svr, ReportedObjectiveMatchesDifferenceForm) {
  Rng rng(23);
  Problem p = random_problem(rng, 40, 3);
  SvrConfig c;
  c.gamma = 0.7;
  const auto s = fit_svr(p.x, p.y, c);
  std::vector<double> beta(p.y.size());
  for (std::size_t i = 0; i < beta.size(); ++i) beta[i] = s.alpha[i] - s.alpha_star[i];
  const Eigen::MatrixXd K = kernel_matrix(p.x, KernelKind::rbf, c.gamma);
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(beta.data(), Eigen::Index(beta.size()));
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(p.y.data(), Eigen::Index(p.y.size()));
  const double expected = oracle::svr_dual(K, y, b, c.epsilon);
  EXPECT_NEAR(s.dual_objective, expected, 1e-9 * std::max(1.0, std::abs(expected)));
  EXPECT_NEAR(svr_dual_objective(p.x, p.y, beta, KernelKind::rbf, c.gamma, c.epsilon), expected, 1e-9);
}

TEST(Svr, PredictionUsesSupportVectorExpansion) {
  Rng rng(24);
  Problem p = random_problem(rng, 25, 2);
  SvrConfig c;
  c.gamma = 1.3;
  const auto s = fit_svr(p.x, p.y, c);
  for (Eigen::Index r = 0; r < p.x.rows(); ++r) {
    double f = s.bias;
    for (std::size_t i = 0; i < p.y.size(); ++i) {
      const double k = std::exp(-c.gamma * (p.x.row(r) - p.x.row(Eigen::Index(i))).squaredNorm());
      f += (s.alpha[i] - s.alpha_star[i]) * k;
    }
    EXPECT_NEAR(predict_row(s, p.x, r), f, 1e-10);
  }
}

TEST(Svr, DefaultGammaIsInverseFeatureCount) {
  Rng rng(25);
  Problem p = random_problem(rng, 20, 4);
  SvrConfig c;
  EXPECT_DOUBLE_EQ(fit_svr(p.x, p.y, c).gamma, 0.25);
}

TEST(Svr, BudgetExhaustionIsFlaggedNotThrown) {
  Rng rng(26);
  Problem p = random_problem(rng, 200, 3);
  SvrConfig c;
  c.max_passes = 1;
  c.tol = 1e-12;
  c.C = 1000;
  SvrSolution s;
  ASSERT_NO_THROW(s = fit_svr(p.x, p.y, c));
  EXPECT_FALSE(s.converged);
  expect_kkt(s, c.C, 1e-8);
}

TEST(Svr, UncachedKernelGivesSameSolution) {
  Rng rng(27);
  Problem p = random_problem(rng, 60, 2);
  SvrConfig cached;
  SvrConfig streamed = cached;
  streamed.cache_mb = 0;
  const auto a = fit_svr(p.x, p.y, cached);
  const auto b = fit_svr(p.x, p.y, streamed);
  EXPECT_EQ(a.alpha, b.alpha);
  EXPECT_EQ(a.alpha_star, b.alpha_star);
  EXPECT_EQ(a.bias, b.bias);
}

TEST(Svr, RejectsBadConfig) {
  Matrix x(2, 1);
  x << 0, 1;
  const std::vector<double> y{0, 1};
  SvrConfig c;
  c.C = 0;
  EXPECT_THROW(fit_svr(x, y, c), ConfigError);
  c = {};
  c.epsilon = -1;
  EXPECT_THROW(fit_svr(x, y, c), ConfigError);
  EXPECT_THROW(parse_kernel("poly"), ConfigError);
}
