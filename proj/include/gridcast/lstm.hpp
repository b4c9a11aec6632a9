#pragma once

#include "gridcast/numeric.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace gridcast {

struct LstmConfig {
  int hidden = 64;
  int epochs = 60;
  double learning_rate = 1e-3;
  int batch_size = 32;
  double clip = 1.0;
  int window = 24;
  // Attention projection size for the attention variant; 0 means `hidden`.
  int attention = 0;
};

void validate(const LstmConfig& config);

// One training example per target index t in [window, n); its inputs are
// rows t - window .. t - 1.
struct SequenceWindows {
  std::size_t window = 0;
  std::vector<std::size_t> targets;
};

SequenceWindows make_windows(std::size_t rows, std::size_t window = 24);

// All parameters live in one flat vector so the optimizer and gradient checks
// can treat them uniformly. Gate blocks are stacked [input; forget; output; candidate].
class LstmNetwork {
 public:
  using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
  using VectorMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

  LstmNetwork() = default;
  // attention == 0 builds the plain LSTM; otherwise the attention-weighted variant.
  LstmNetwork(int input_size, int hidden, int attention);

  int input_size() const { return input_; }
  int hidden() const { return hidden_; }
  int attention() const { return attention_; }
  bool has_attention() const { return attention_ > 0; }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  ConstMatrixMap input_weights() const { return cmat(w_off_, 4 * hidden_, input_); }
  ConstMatrixMap recurrent_weights() const { return cmat(u_off_, 4 * hidden_, hidden_); }
  ConstVectorMap gate_bias() const { return cvec(b_off_, 4 * hidden_); }
  ConstMatrixMap attention_weights() const { return cmat(aw_off_, attention_, hidden_); }
  ConstVectorMap attention_bias() const { return cvec(ab_off_, attention_); }
  ConstVectorMap attention_vector() const { return cvec(av_off_, attention_); }
  ConstVectorMap head_weights() const { return cvec(hw_off_, head_inputs()); }
  double head_bias() const { return params_[static_cast<Eigen::Index>(hb_off_)]; }

  MatrixMap input_weights() { return mat(w_off_, 4 * hidden_, input_); }
  MatrixMap recurrent_weights() { return mat(u_off_, 4 * hidden_, hidden_); }
  VectorMap gate_bias() { return vec(b_off_, 4 * hidden_); }
  MatrixMap attention_weights() { return mat(aw_off_, attention_, hidden_); }
  VectorMap attention_bias() { return vec(ab_off_, attention_); }
  VectorMap attention_vector() { return vec(av_off_, attention_); }
  VectorMap head_weights() { return vec(hw_off_, head_inputs()); }
  double& head_bias() { return params_[static_cast<Eigen::Index>(hb_off_)]; }

  int head_inputs() const { return has_attention() ? 2 * hidden_ : hidden_; }

  void initialize(Rng& rng);

  // Activations of a batch forward pass. Matrices are (size x batch).
  struct Trace {
    std::vector<Eigen::MatrixXd> h;  // h[0] = initial state, h[t] after step t
    std::vector<Eigen::MatrixXd> c;
    std::vector<Eigen::MatrixXd> gate_i, gate_f, gate_o, cand, tanh_c;
    // Attention variant only.
    std::vector<Eigen::MatrixXd> att_hidden;  // tanh(W_h h_t + b), per step
    Eigen::MatrixXd scores;                   // T x batch
    Eigen::MatrixXd weights;                  // T x batch, softmax over t
    Eigen::MatrixXd context;                  // hidden x batch
    Eigen::RowVectorXd output;                // batch
  };

  // inputs[t] is (input_size x batch) for t = 0..T-1.
  Trace forward(const std::vector<Eigen::MatrixXd>& inputs) const;

  // Mean squared error over the batch; fills `grad` (same layout as parameters).
  double loss_and_gradient(const std::vector<Eigen::MatrixXd>& inputs, const Eigen::RowVectorXd& targets,
                           Eigen::VectorXd& grad) const;
  double loss(const std::vector<Eigen::MatrixXd>& inputs, const Eigen::RowVectorXd& targets) const;

 private:
  ConstMatrixMap cmat(std::size_t off, int r, int c) const { return {params_.data() + off, r, c}; }
  ConstVectorMap cvec(std::size_t off, int n) const { return {params_.data() + off, n}; }
  MatrixMap mat(std::size_t off, int r, int c) { return {params_.data() + off, r, c}; }
  VectorMap vec(std::size_t off, int n) { return {params_.data() + off, n}; }

  int input_ = 0;
  int hidden_ = 0;
  int attention_ = 0;
  std::size_t w_off_ = 0, u_off_ = 0, b_off_ = 0, aw_off_ = 0, ab_off_ = 0, av_off_ = 0, hw_off_ = 0, hb_off_ = 0;
  Eigen::VectorXd params_;
};

struct CellState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

// Single standard LSTM step using the network's gate parameters.
CellState lstm_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev,
                            const LstmNetwork& net);

struct AttentionResult {
  Eigen::VectorXd context;
  std::vector<double> weights;
};

// e_t = v' tanh(W_h h_t + b); alpha = softmax(e); c = sum_t alpha_t h_t.
AttentionResult attention_forward(const std::vector<Eigen::VectorXd>& hidden_states, const Eigen::MatrixXd& w_h,
                                  const Eigen::VectorXd& b, const Eigen::VectorXd& v);

struct SequenceModel {
  LstmNetwork network;
  std::size_t window = 24;
  std::vector<double> epoch_loss;

  // One entry per row; rows without a full history are empty.
  std::vector<std::optional<double>> predict(const Matrix& x) const;
};

SequenceModel fit_sequence_model(const Matrix& x, std::span<const double> y, const LstmConfig& config,
                                 bool attention, std::uint64_t seed);

// Inputs for a set of windows: result[t] has one column per window.
std::vector<Eigen::MatrixXd> gather_windows(const Eigen::MatrixXd& x_transposed, std::span<const std::size_t> targets,
                                            std::size_t window);

}  // namespace gridcast
