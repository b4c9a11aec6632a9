#include <gtest/gtest.h>

#include "gridcast/error.hpp"
#include "gridcast/lstm.hpp"

#include <cmath>

using namespace gridcast;

namespace {

// Entries below this magnitude are compared absolutely; central differences at
// h = 1e-5 carry about 1e-11 of roundoff.
constexpr double kGradientFloor = 1e-6;

std::vector<Eigen::MatrixXd> random_inputs(Rng& rng, int d, int steps, int batch) {
  std::vector<Eigen::MatrixXd> in(static_cast<std::size_t>(steps), Eigen::MatrixXd(d, batch));
  for (auto& m : in) {
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-1, 1);
  }
  return in;
}

Eigen::RowVectorXd random_targets(Rng& rng, int batch) {
  Eigen::RowVectorXd t(batch);
  for (int b = 0; b < batch; ++b) t[b] = rng.uniform(-1, 1);
  return t;
}

double gradient_error(LstmNetwork net, const std::vector<Eigen::MatrixXd>& in, const Eigen::RowVectorXd& target) {
  Eigen::VectorXd analytic;
  net.loss_and_gradient(in, target, analytic);
  const Eigen::VectorXd theta = net.parameters();
  const auto f = [&](std::span<const double> p) {
    LstmNetwork probe = net;
    probe.parameters() = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    return probe.loss(in, target);
  };
  const auto numeric = finite_difference_gradient(f, {theta.data(), std::size_t(theta.size())}, 1e-5);
  return max_relative_error({analytic.data(), std::size_t(analytic.size())}, numeric, kGradientFloor);
}

Matrix ramp_features(std::size_t n, std::size_t d) {
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < d; ++f) {
      x(Eigen::Index(i), Eigen::Index(f)) = 0.5 + 0.4 * std::sin(0.3 * double(i) + double(f));
    }
  }
  return x;
}

}  // namespace

TEST(LstmCell, ZeroWeightsKeepStateAtZero) {
  LstmNetwork net(3, 4, 0);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 0.7);
  const auto s = lstm_cell_forward(x, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), net);
  EXPECT_TRUE(s.h.isZero(0));
  EXPECT_TRUE(s.c.isZero(0));
}

TEST(LstmCell, SaturatedForgetGateCarriesCellState) {
  LstmNetwork net(2, 3, 0);
  auto b = net.gate_bias();
  b.segment(0, 3).setConstant(-20.0);  // input gate closed
  b.segment(3, 3).setConstant(20.0);   // forget gate open
  Eigen::VectorXd c(3);
  c << 0.3, -1.2, 2.0;
  const auto s = lstm_cell_forward(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(3), c, net);
  for (Eigen::Index k = 0; k < 3; ++k) {
    EXPECT_NEAR(s.c[k], c[k], 1e-8);
    // o = 0.5 with zero output bias.
    EXPECT_NEAR(s.h[k], 0.5 * std::tanh(c[k]), 1e-8);
  }
}

TEST(LstmCell, HandComputedSingleUnit) {
  LstmNetwork net(1, 1, 0);
  auto w = net.input_weights();
  w << 0.5, -0.3, 0.8, 1.1;
  auto u = net.recurrent_weights();
  u << 0.2, 0.4, -0.6, 0.1;
  auto b = net.gate_bias();
  b << 0.1, 0.2, -0.1, 0.0;
  const double x = 0.9, h0 = 0.25, c0 = -0.4;
  const auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double i = sig(0.5 * x + 0.2 * h0 + 0.1);
  const double f = sig(-0.3 * x + 0.4 * h0 + 0.2);
  const double o = sig(0.8 * x - 0.6 * h0 - 0.1);
  const double g = std::tanh(1.1 * x + 0.1 * h0);
  const double c1 = f * c0 + i * g;
  const auto s = lstm_cell_forward(Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, h0),
                                   Eigen::VectorXd::Constant(1, c0), net);
  EXPECT_NEAR(s.c[0], c1, 1e-15);
  EXPECT_NEAR(s.h[0], o * std::tanh(c1), 1e-15);
}

TEST(LstmCell, BatchForwardMatchesSingleSteps) {
  Rng rng(3);
  LstmNetwork net(3, 5, 0);
  net.initialize(rng);
  const auto in = random_inputs(rng, 3, 4, 2);
  const auto trace = net.forward(in);
  for (Eigen::Index col = 0; col < 2; ++col) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(5), c = Eigen::VectorXd::Zero(5);
    for (std::size_t t = 0; t < in.size(); ++t) {
      const auto s = lstm_cell_forward(in[t].col(col), h, c, net);
      h = s.h;
      c = s.c;
    }
    EXPECT_TRUE(trace.h.back().col(col).isApprox(h, 1e-12));
    const double out = net.head_weights().dot(h) + net.head_bias();
    EXPECT_NEAR(trace.output[col], out, 1e-12);
  }
}

TEST(LstmGradient, MatchesFiniteDifferences) {
  Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    const int hidden = 1 + int(rng.uniform_index(8));
    const int steps = 1 + int(rng.uniform_index(6));
    const int d = 1 + int(rng.uniform_index(4));
    LstmNetwork net(d, hidden, 0);
    net.initialize(rng);
    const auto in = random_inputs(rng, d, steps, 3);
    const auto target = random_targets(rng, 3);
    EXPECT_LT(gradient_error(net, in, target), 1e-5) << "trial " << trial;
  }
}

TEST(AwmLstmGradient, MatchesFiniteDifferences) {
  Rng rng(202);
  for (int trial = 0; trial < 10; ++trial) {
    const int hidden = 1 + int(rng.uniform_index(8));
    const int att = 1 + int(rng.uniform_index(8));
    const int steps = 1 + int(rng.uniform_index(6));
    const int d = 1 + int(rng.uniform_index(4));
    LstmNetwork net(d, hidden, att);
    net.initialize(rng);
    const auto in = random_inputs(rng, d, steps, 3);
    const auto target = random_targets(rng, 3);
    EXPECT_LT(gradient_error(net, in, target), 1e-4) << "trial " << trial;
  }
}

TEST(Attention, IdenticalStatesGiveUniformWeights) {
  const Eigen::VectorXd h = Eigen::VectorXd::LinSpaced(4, -1, 1);
  const std::vector<Eigen::VectorXd> states(5, h);
  Rng rng(4);
  Eigen::MatrixXd w(3, 4);
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.normal();
  const auto r = attention_forward(states, w, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Constant(3, 2.0));
  for (double a : r.weights) EXPECT_NEAR(a, 0.2, 1e-15);
  EXPECT_TRUE(r.context.isApprox(h, 1e-15));
}

TEST(Attention, SingleStepReturnsItsState) {
  Eigen::VectorXd h(2);
  h << 0.3, -0.7;
  const auto r = attention_forward({h}, Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2),
                                   Eigen::VectorXd::Ones(2));
  ASSERT_EQ(r.weights.size(), 1u);
  EXPECT_EQ(r.weights[0], 1.0);
  EXPECT_TRUE(r.context.isApprox(h));
}

TEST(Attention, HandComputedTwoSteps) {
  const Eigen::MatrixXd w = Eigen::MatrixXd::Ones(1, 1);
  const std::vector<Eigen::VectorXd> states{Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, 1.0)};
  const auto r = attention_forward(states, w, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
  const double e1 = std::tanh(0.5), e2 = std::tanh(1.0);
  const double a1 = std::exp(e1) / (std::exp(e1) + std::exp(e2));
  EXPECT_NEAR(r.weights[0], a1, 1e-15);
  EXPECT_NEAR(r.weights[1], 1 - a1, 1e-15);
  EXPECT_NEAR(r.context[0], a1 * 0.5 + (1 - a1) * 1.0, 1e-15);
}

TEST(Attention, ScoresOneAndTwoGiveKnownWeights) {
  Eigen::MatrixXd w(1, 1);
  w << 1.0;
  const double s1 = std::atanh(0.25), s2 = std::atanh(0.5);
  const std::vector<Eigen::VectorXd> h{Eigen::VectorXd::Constant(1, s1), Eigen::VectorXd::Constant(1, s2)};
  const auto r = attention_forward(h, w, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 4.0));
  const double expected = 1.0 / (1.0 + std::exp(1.0));
  EXPECT_NEAR(r.weights[0], expected, 1e-14);
  EXPECT_NEAR(r.weights[1], 1.0 - expected, 1e-14);
  EXPECT_NEAR(r.weights[0], 0.26894, 1e-5);
  EXPECT_NEAR(r.weights[1], 0.73106, 1e-5);
  EXPECT_NEAR(r.context[0], r.weights[0] * s1 + r.weights[1] * s2, 1e-15);
}

TEST(Attention, WeightsSumToOneAndZeroVectorAverages) {
  Rng rng(5);
  std::vector<Eigen::VectorXd> states;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  for (int t = 0; t < 6; ++t) {
    Eigen::VectorXd h(3);
    for (Eigen::Index k = 0; k < 3; ++k) h[k] = rng.normal();
    states.push_back(h);
    mean += h / 6.0;
  }
  Eigen::MatrixXd w(2, 3);
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.normal();
  Eigen::VectorXd v(2);
  v << 1.5, -0.4;
  const auto r = attention_forward(states, w, Eigen::VectorXd::Zero(2), v);
  double sum = 0;
  for (double a : r.weights) {
    EXPECT_GT(a, 0.0);
    sum += a;
  }
  EXPECT_NEAR(sum, 1.0, 1e-15);
  const auto flat = attention_forward(states, w, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2));
  EXPECT_TRUE(flat.context.isApprox(mean, 1e-14));
}

TEST(Windows, CountsAndOffsets) {
  EXPECT_EQ(make_windows(25).targets, std::vector<std::size_t>{24});
  const auto w = make_windows(30);
  ASSERT_EQ(w.targets.size(), 6u);
  EXPECT_EQ(w.targets.front(), 24u);
  EXPECT_EQ(w.targets.back(), 29u);
  EXPECT_EQ(make_windows(3, 1).targets, (std::vector<std::size_t>{1, 2}));
  EXPECT_THROW(make_windows(24), DataError);
  EXPECT_THROW(make_windows(5, 0), ConfigError);
}

TEST(Windows, GatherTakesPrecedingRows) {
  Eigen::MatrixXd xt(1, 6);
  xt << 0, 1, 2, 3, 4, 5;
  const std::vector<std::size_t> targets{3, 5};
  const auto in = gather_windows(xt, targets, 3);
  ASSERT_EQ(in.size(), 3u);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(in[t](0, 0), double(t));
    EXPECT_EQ(in[t](0, 1), double(2 + t));
  }
}

TEST(SequenceModel, PredictsOnlyRowsWithFullHistory) {
  LstmConfig c;
  c.hidden = 4;
  c.epochs = 2;
  const Matrix x = ramp_features(40, 2);
  std::vector<double> y(40);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x(Eigen::Index(i), 0);
  const auto m = fit_sequence_model(x, y, c, false, 42);
  const auto p = m.predict(x.topRows(30));
  ASSERT_EQ(p.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(p[i].has_value(), i >= 24) << i;
  EXPECT_EQ(m.predict(x.topRows(24)), std::vector<std::optional<double>>(24));
}

TEST(SequenceModel, TrainingReducesLossAndIsDeterministic) {
  const Matrix x = ramp_features(200, 3);
  std::vector<double> y(200);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.5 * x(Eigen::Index(i), 1) + 0.2;
  for (bool attention : {false, true}) {
    LstmConfig c;
    c.hidden = 8;
    c.epochs = 15;
    c.learning_rate = 5e-3;
    const auto a = fit_sequence_model(x, y, c, attention, 42);
    const auto b = fit_sequence_model(x, y, c, attention, 42);
    ASSERT_EQ(a.epoch_loss.size(), 15u);
    EXPECT_LE(a.epoch_loss.back(), a.epoch_loss.front());
    EXPECT_EQ(a.epoch_loss, b.epoch_loss);
    EXPECT_TRUE(a.network.parameters() == b.network.parameters());
    const auto other = fit_sequence_model(x, y, c, attention, 43);
    EXPECT_FALSE(other.network.parameters() == a.network.parameters());
  }
}

TEST(SequenceModel, RejectsBadConfigAndShortSeries) {
  LstmConfig c;
  c.hidden = 0;
  const Matrix x = ramp_features(40, 2);
  std::vector<double> y(40, 0.0);
  EXPECT_THROW(fit_sequence_model(x, y, c, false, 1), ConfigError);
  c = {};
  c.learning_rate = 0;
  EXPECT_THROW(fit_sequence_model(x, y, c, false, 1), ConfigError);
  c = {};
  EXPECT_THROW(fit_sequence_model(x.topRows(10), std::span<const double>(y).first(10), c, false, 1), DataError);
}
