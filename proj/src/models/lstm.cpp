#include "gridcast/lstm.hpp"

#include "gridcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gridcast {

void validate(const LstmConfig& c) {
  if (c.hidden < 1) throw ConfigError("lstm: hidden size must be at least 1");
  if (c.epochs < 0) throw ConfigError("lstm: epochs must be non-negative");
  if (!(c.learning_rate > 0.0)) throw ConfigError("lstm: learning rate must be positive");
  if (c.batch_size < 1) throw ConfigError("lstm: batch size must be at least 1");
  if (!(c.clip > 0.0)) throw ConfigError("lstm: clip must be positive");
  if (c.window < 1) throw ConfigError("lstm: window must be at least 1");
  if (c.attention < 0) throw ConfigError("lstm: attention size must be non-negative");
}

SequenceWindows make_windows(std::size_t rows, std::size_t window) {
  if (window < 1) throw ConfigError("window must be at least 1");
  if (rows < window + 1) {
    throw DataError("need at least " + std::to_string(window + 1) + " rows to form one window (got " +
                    std::to_string(rows) + ")");
  }
  SequenceWindows w;
  w.window = window;
  w.targets.resize(rows - window);
  std::iota(w.targets.begin(), w.targets.end(), window);
  return w;
}

namespace {

Eigen::MatrixXd sigmoid_of(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Eigen::MatrixXd tanh_of(const Eigen::MatrixXd& z) { return z.array().tanh().matrix(); }

}  // namespace

LstmNetwork::LstmNetwork(int input_size, int hidden, int attention)
    : input_(input_size), hidden_(hidden), attention_(attention) {
  std::size_t off = 0;
  const auto take = [&off](std::size_t count) {
    const std::size_t at = off;
    off += count;
    return at;
  };
  const auto h = static_cast<std::size_t>(hidden);
  const auto d = static_cast<std::size_t>(input_size);
  const auto a = static_cast<std::size_t>(attention);
  w_off_ = take(4 * h * d);
  u_off_ = take(4 * h * h);
  b_off_ = take(4 * h);
  aw_off_ = take(a * h);
  ab_off_ = take(a);
  av_off_ = take(a);
  hw_off_ = take(static_cast<std::size_t>(head_inputs()));
  hb_off_ = take(1);
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(off));
}

void LstmNetwork::initialize(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
  for (Eigen::Index k = 0; k < params_.size(); ++k) params_[k] = rng.uniform(-bound, bound);
}

LstmNetwork::Trace LstmNetwork::forward(const std::vector<Eigen::MatrixXd>& inputs) const {
  const auto steps = inputs.size();
  if (steps == 0) throw DataError("lstm forward: empty sequence");
  const Eigen::Index batch = inputs.front().cols();
  const Eigen::Index h = hidden_;
  Trace tr;
  tr.h.assign(steps + 1, Eigen::MatrixXd::Zero(h, batch));
  tr.c.assign(steps + 1, Eigen::MatrixXd::Zero(h, batch));
  tr.gate_i.resize(steps + 1);
  tr.gate_f.resize(steps + 1);
  tr.gate_o.resize(steps + 1);
  tr.cand.resize(steps + 1);
  tr.tanh_c.resize(steps + 1);
  const auto w = input_weights();
  const auto u = recurrent_weights();
  const auto b = gate_bias();
  Eigen::MatrixXd z(4 * h, batch);
  for (std::size_t t = 1; t <= steps; ++t) {
    if (inputs[t - 1].rows() != input_ || inputs[t - 1].cols() != batch) {
      throw DataError("lstm forward: input shape mismatch");
    }
    z.noalias() = w * inputs[t - 1];
    z.noalias() += u * tr.h[t - 1];
    z.colwise() += b;
    tr.gate_i[t] = sigmoid_of(z.topRows(h));
    tr.gate_f[t] = sigmoid_of(z.middleRows(h, h));
    tr.gate_o[t] = sigmoid_of(z.middleRows(2 * h, h));
    tr.cand[t] = tanh_of(z.bottomRows(h));
    tr.c[t] = tr.gate_f[t].cwiseProduct(tr.c[t - 1]) + tr.gate_i[t].cwiseProduct(tr.cand[t]);
    tr.tanh_c[t] = tanh_of(tr.c[t]);
    tr.h[t] = tr.gate_o[t].cwiseProduct(tr.tanh_c[t]);
  }

  const auto head = head_weights();
  if (!has_attention()) {
    tr.output = head.transpose() * tr.h[steps];
  } else {
    const auto aw = attention_weights();
    const auto ab = attention_bias();
    const auto av = attention_vector();
    const auto T = static_cast<Eigen::Index>(steps);
    tr.att_hidden.resize(steps + 1);
    tr.scores.resize(T, batch);
    for (std::size_t t = 1; t <= steps; ++t) {
      Eigen::MatrixXd pre = aw * tr.h[t];
      pre.colwise() += ab;
      tr.att_hidden[t] = tanh_of(pre);
      tr.scores.row(static_cast<Eigen::Index>(t - 1)) = av.transpose() * tr.att_hidden[t];
    }
    tr.weights.resize(T, batch);
    for (Eigen::Index col = 0; col < batch; ++col) {
      const double top = tr.scores.col(col).maxCoeff();
      Eigen::VectorXd e = (tr.scores.col(col).array() - top).exp();
      tr.weights.col(col) = e / e.sum();
    }
    tr.context = Eigen::MatrixXd::Zero(h, batch);
    for (std::size_t t = 1; t <= steps; ++t) {
      tr.context += tr.h[t] * tr.weights.row(static_cast<Eigen::Index>(t - 1)).asDiagonal();
    }
    tr.output = head.head(h).transpose() * tr.context + head.tail(h).transpose() * tr.h[steps];
  }
  tr.output.array() += head_bias();
  return tr;
}

double LstmNetwork::loss(const std::vector<Eigen::MatrixXd>& inputs, const Eigen::RowVectorXd& targets) const {
  const Trace tr = forward(inputs);
  return (tr.output - targets).squaredNorm() / static_cast<double>(targets.size());
}

double LstmNetwork::loss_and_gradient(const std::vector<Eigen::MatrixXd>& inputs,
                                      const Eigen::RowVectorXd& targets, Eigen::VectorXd& grad) const {
  const Trace tr = forward(inputs);
  const auto steps = inputs.size();
  const Eigen::Index batch = targets.size();
  const Eigen::Index h = hidden_;
  const Eigen::RowVectorXd resid = tr.output - targets;
  const double value = resid.squaredNorm() / static_cast<double>(batch);

  grad = Eigen::VectorXd::Zero(params_.size());
  LstmNetwork view;  // gradient accessors share the parameter layout
  view.input_ = input_;
  view.hidden_ = hidden_;
  view.attention_ = attention_;
  view.w_off_ = w_off_;
  view.u_off_ = u_off_;
  view.b_off_ = b_off_;
  view.aw_off_ = aw_off_;
  view.ab_off_ = ab_off_;
  view.av_off_ = av_off_;
  view.hw_off_ = hw_off_;
  view.hb_off_ = hb_off_;
  view.params_.swap(grad);

  const Eigen::RowVectorXd dy = resid * (2.0 / static_cast<double>(batch));
  const auto head = head_weights();
  std::vector<Eigen::MatrixXd> dh_ext(steps + 1, Eigen::MatrixXd::Zero(h, batch));
  view.head_bias() = dy.sum();
  if (!has_attention()) {
    view.head_weights() = tr.h[steps] * dy.transpose();
    dh_ext[steps] = head * dy;
  } else {
    view.head_weights().head(h) = tr.context * dy.transpose();
    view.head_weights().tail(h) = tr.h[steps] * dy.transpose();
    dh_ext[steps] = head.tail(h) * dy;
    const Eigen::MatrixXd dctx = head.head(h) * dy;

    const auto T = static_cast<Eigen::Index>(steps);
    Eigen::MatrixXd dweights(T, batch);
    for (std::size_t t = 1; t <= steps; ++t) {
      const auto row = static_cast<Eigen::Index>(t - 1);
      dweights.row(row) = dctx.cwiseProduct(tr.h[t]).colwise().sum();
      dh_ext[t] += dctx * tr.weights.row(row).asDiagonal();
    }
    // Softmax Jacobian per column.
    const Eigen::RowVectorXd expected = tr.weights.cwiseProduct(dweights).colwise().sum();
    Eigen::MatrixXd dscores = tr.weights.cwiseProduct(dweights - expected.replicate(T, 1));

    const auto aw = attention_weights();
    const auto av = attention_vector();
    auto g_aw = view.attention_weights();
    auto g_ab = view.attention_bias();
    auto g_av = view.attention_vector();
    for (std::size_t t = 1; t <= steps; ++t) {
      const Eigen::RowVectorXd ds = dscores.row(static_cast<Eigen::Index>(t - 1));
      g_av.noalias() += tr.att_hidden[t] * ds.transpose();
      const Eigen::MatrixXd dpre =
          (av * ds).cwiseProduct((1.0 - tr.att_hidden[t].array().square()).matrix());
      g_aw.noalias() += dpre * tr.h[t].transpose();
      g_ab += dpre.rowwise().sum();
      dh_ext[t].noalias() += aw.transpose() * dpre;
    }
  }

  const auto u = recurrent_weights();
  auto g_w = view.input_weights();
  auto g_u = view.recurrent_weights();
  auto g_b = view.gate_bias();
  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(h, batch);
  Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(h, batch);
  Eigen::MatrixXd dz(4 * h, batch);
  for (std::size_t t = steps; t >= 1; --t) {
    const Eigen::MatrixXd dh = dh_ext[t] + dh_next;
    const Eigen::ArrayXXd o = tr.gate_o[t].array();
    const Eigen::ArrayXXd i = tr.gate_i[t].array();
    const Eigen::ArrayXXd f = tr.gate_f[t].array();
    const Eigen::ArrayXXd g = tr.cand[t].array();
    const Eigen::ArrayXXd tc = tr.tanh_c[t].array();
    const Eigen::ArrayXXd dc = dc_next.array() + dh.array() * o * (1.0 - tc.square());
    dz.topRows(h) = (dc * g * i * (1.0 - i)).matrix();
    dz.middleRows(h, h) = (dc * tr.c[t - 1].array() * f * (1.0 - f)).matrix();
    dz.middleRows(2 * h, h) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dz.bottomRows(h) = (dc * i * (1.0 - g.square())).matrix();
    g_w.noalias() += dz * inputs[t - 1].transpose();
    g_u.noalias() += dz * tr.h[t - 1].transpose();
    g_b += dz.rowwise().sum();
    dh_next.noalias() = u.transpose() * dz;
    dc_next = (dc * f).matrix();
  }
  grad.swap(view.params_);
  return value;
}

CellState lstm_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev,
                            const LstmNetwork& net) {
  const Eigen::Index h = net.hidden();
  if (x.size() != net.input_size() || h_prev.size() != h || c_prev.size() != h) {
    throw DataError("lstm_cell_forward: shape mismatch");
  }
  const Eigen::VectorXd z = net.input_weights() * x + net.recurrent_weights() * h_prev + net.gate_bias();
  const Eigen::VectorXd i = sigmoid_of(z.head(h));
  const Eigen::VectorXd f = sigmoid_of(z.segment(h, h));
  const Eigen::VectorXd o = sigmoid_of(z.segment(2 * h, h));
  const Eigen::VectorXd g = tanh_of(z.tail(h));
  CellState s;
  s.c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  s.h = o.cwiseProduct(tanh_of(s.c));
  return s;
}

AttentionResult attention_forward(const std::vector<Eigen::VectorXd>& hidden_states, const Eigen::MatrixXd& w_h,
                                  const Eigen::VectorXd& b, const Eigen::VectorXd& v) {
  if (hidden_states.empty()) throw DataError("attention_forward: no hidden states");
  std::vector<double> scores;
  scores.reserve(hidden_states.size());
  for (const auto& h : hidden_states) {
    const Eigen::VectorXd pre = w_h * h + b;
    scores.push_back(v.dot(tanh_of(pre).col(0)));
  }
  AttentionResult r;
  r.weights = softmax(scores);
  r.context = Eigen::VectorXd::Zero(hidden_states.front().size());
  for (std::size_t t = 0; t < hidden_states.size(); ++t) r.context += r.weights[t] * hidden_states[t];
  return r;
}

std::vector<Eigen::MatrixXd> gather_windows(const Eigen::MatrixXd& x_transposed, std::span<const std::size_t> targets,
                                            std::size_t window) {
  const auto batch = static_cast<Eigen::Index>(targets.size());
  std::vector<Eigen::MatrixXd> inputs(window, Eigen::MatrixXd(x_transposed.rows(), batch));
  for (std::size_t t = 0; t < window; ++t) {
    for (Eigen::Index b = 0; b < batch; ++b) {
      inputs[t].col(b) = x_transposed.col(static_cast<Eigen::Index>(targets[static_cast<std::size_t>(b)] - window + t));
    }
  }
  return inputs;
}

std::vector<std::optional<double>> SequenceModel::predict(const Matrix& x) const {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::optional<double>> out(n);
  if (n <= window) return out;
  const Eigen::MatrixXd xt = x.transpose();
  const SequenceWindows w = make_windows(n, window);
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < w.targets.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, w.targets.size() - start);
    std::span<const std::size_t> chunk(w.targets.data() + start, count);
    const auto trace = network.forward(gather_windows(xt, chunk, window));
    for (std::size_t k = 0; k < count; ++k) out[chunk[k]] = trace.output[static_cast<Eigen::Index>(k)];
  }
  return out;
}

SequenceModel fit_sequence_model(const Matrix& x, std::span<const double> y, const LstmConfig& config,
                                 bool attention, std::uint64_t seed) {
  validate(config);
  const auto n = static_cast<std::size_t>(x.rows());
  if (y.size() != n) throw DataError("lstm: misaligned training data");
  const auto window = static_cast<std::size_t>(config.window);
  const SequenceWindows windows = make_windows(n, window);

  const Rng root(seed);
  Rng init_rng = root.derive("init");
  Rng order_rng = root.derive("order");
  const int att = attention ? (config.attention > 0 ? config.attention : config.hidden) : 0;
  SequenceModel model;
  model.window = window;
  model.network = LstmNetwork(static_cast<int>(x.cols()), config.hidden, att);
  model.network.initialize(init_rng);

  const Eigen::MatrixXd xt = x.transpose();
  Eigen::VectorXd& theta = model.network.parameters();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd grad;
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double adam_eps = 1e-8;
  long step = 0;

  std::vector<std::size_t> order = windows.targets;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t count = std::min(batch_size, order.size() - start);
      std::span<const std::size_t> batch(order.data() + start, count);
      const auto inputs = gather_windows(xt, batch, window);
      Eigen::RowVectorXd targets(static_cast<Eigen::Index>(count));
      for (std::size_t k = 0; k < count; ++k) targets[static_cast<Eigen::Index>(k)] = y[batch[k]];
      const double loss = model.network.loss_and_gradient(inputs, targets, grad);
      total += loss * static_cast<double>(count);

      const double norm = grad.norm();
      if (norm > config.clip) grad *= config.clip / norm;
      ++step;
      m1 = beta1 * m1 + (1.0 - beta1) * grad;
      m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      theta.array() -= config.learning_rate * (m1.array() / c1) / ((m2.array() / c2).sqrt() + adam_eps);
    }
    if (!theta.allFinite()) {
      throw NumericError("lstm: non-finite weights after epoch " + std::to_string(epoch + 1));
    }
    model.epoch_loss.push_back(total / static_cast<double>(order.size()));
  }
  return model;
}

}  // namespace gridcast
