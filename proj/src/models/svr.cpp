#include "gridcast/svr.hpp"

#include "gridcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gridcast {

KernelKind parse_kernel(std::string_view name) {
  if (name == "linear") return KernelKind::linear;
  if (name == "rbf") return KernelKind::rbf;
  throw ConfigError("unknown kernel: " + std::string(name));
}

const char* kernel_name(KernelKind k) { return k == KernelKind::linear ? "linear" : "rbf"; }

void validate(const SvrConfig& c) {
  if (!(c.C > 0.0)) throw ConfigError("svr: C must be positive");
  if (!(c.epsilon >= 0.0)) throw ConfigError("svr: epsilon must be non-negative");
  if (!(c.tol > 0.0)) throw ConfigError("svr: tol must be positive");
  if (c.max_passes < 1) throw ConfigError("svr: max_passes must be at least 1");
}

double kernel_value(KernelKind kind, double gamma, std::span<const double> a, std::span<const double> b) {
  if (kind == KernelKind::linear) {
    double dot = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
    return dot;
  }
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
  return std::exp(-gamma * d2);
}

namespace {

std::span<const double> row_of(const Matrix& x, std::size_t i) {
  return {x.data() + i * static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(x.cols())};
}

class KernelMatrix {
 public:
  KernelMatrix(const Matrix& x, KernelKind kind, double gamma, double cache_mb)
      : x_(x), kind_(kind), gamma_(gamma), n_(static_cast<std::size_t>(x.rows())) {
    cached_ = static_cast<double>(n_) * static_cast<double>(n_) * 8.0 <= cache_mb * 1024.0 * 1024.0;
    if (cached_) {
      full_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
          const double k = kernel_value(kind_, gamma_, row_of(x_, i), row_of(x_, j));
          full_[i * n_ + j] = k;
          full_[j * n_ + i] = k;
        }
      }
    }
    diag_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) diag_[i] = kernel_value(kind_, gamma_, row_of(x_, i), row_of(x_, i));
  }

  // Row i of the base kernel, valid until the next call.
  std::span<const double> row(std::size_t i) {
    if (cached_) return {full_.data() + i * n_, n_};
    scratch_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) scratch_[j] = kernel_value(kind_, gamma_, row_of(x_, i), row_of(x_, j));
    return scratch_;
  }
  double diag(std::size_t i) const { return diag_[i]; }

 private:
  const Matrix& x_;
  KernelKind kind_;
  double gamma_;
  std::size_t n_;
  bool cached_ = false;
  std::vector<double> full_;
  std::vector<double> diag_;
  std::vector<double> scratch_;
};

constexpr double kTau = 1e-12;

}  // namespace

SvrSolution fit_svr(const Matrix& x, std::span<const double> y, const SvrConfig& config) {
  validate(config);
  const auto l = static_cast<std::size_t>(x.rows());
  if (l == 0 || y.size() != l) throw DataError("svr: empty or misaligned training data");

  SvrSolution sol;
  sol.kernel = config.kernel;
  sol.gamma = config.gamma > 0.0 ? config.gamma : 1.0 / static_cast<double>(std::max<Eigen::Index>(1, x.cols()));
  sol.C = config.C;
  sol.epsilon = config.epsilon;
  const double C = config.C;

  // Variables 0..l-1 are a_i (sign +1), l..2l-1 are a_i^* (sign -1).
  const std::size_t n2 = 2 * l;
  std::vector<double> alpha(n2, 0.0);
  std::vector<double> grad(n2);
  std::vector<double> sign(n2);
  for (std::size_t t = 0; t < l; ++t) {
    sign[t] = 1.0;
    sign[t + l] = -1.0;
    grad[t] = config.epsilon - y[t];
    grad[t + l] = config.epsilon + y[t];
  }
  KernelMatrix kernel(x, config.kernel, sol.gamma, config.cache_mb);
  const auto base = [l](std::size_t t) { return t < l ? t : t - l; };
  const auto upper = [&](std::size_t t) { return alpha[t] >= C; };
  const auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  const long max_iter = static_cast<long>(config.max_passes) * static_cast<long>(std::max<std::size_t>(n2, 100));
  std::vector<double> ki_copy(l);
  long iter = 0;
  double violation = std::numeric_limits<double>::infinity();
  while (iter < max_iter) {
    // Maximal violating pair with second-order selection of j.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n2;
    for (std::size_t t = 0; t < n2; ++t) {
      if (sign[t] > 0) {
        if (!upper(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          i = t;
        }
      } else if (!lower(t) && grad[t] >= gmax) {
        gmax = grad[t];
        i = t;
      }
    }
    if (i == n2) {
      violation = 0.0;
      break;
    }
    const auto ki = kernel.row(base(i));
    std::copy(ki.begin(), ki.end(), ki_copy.begin());
    const double qii = kernel.diag(base(i));
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t j = n2;
    for (std::size_t t = 0; t < n2; ++t) {
      const double q_it = sign[i] * sign[t] * ki_copy[base(t)];
      if (sign[t] > 0) {
        if (lower(t)) continue;
        gmax2 = std::max(gmax2, grad[t]);
        const double diff = gmax + grad[t];
        if (diff > 0) {
          double quad = qii + kernel.diag(base(t)) - 2.0 * sign[i] * q_it;
          if (quad <= 0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best_obj) {
            best_obj = obj;
            j = t;
          }
        }
      } else {
        if (upper(t)) continue;
        gmax2 = std::max(gmax2, -grad[t]);
        const double diff = gmax - grad[t];
        if (diff > 0) {
          double quad = qii + kernel.diag(base(t)) + 2.0 * sign[i] * q_it;
          if (quad <= 0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best_obj) {
            best_obj = obj;
            j = t;
          }
        }
      }
    }
    violation = gmax + gmax2;
    if (violation < config.tol || j == n2) break;
    ++iter;

    const auto kj = kernel.row(base(j));
    const double q_ij = sign[i] * sign[j] * ki_copy[base(j)];
    const double qjj = kernel.diag(base(j));
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (sign[i] != sign[j]) {
      double quad = qii + qjj + 2.0 * q_ij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * q_ij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n2; ++t) {
      grad[t] += sign[t] * (sign[i] * ki_copy[base(t)] * di + sign[j] * kj[base(t)] * dj);
    }
  }
  sol.iterations = iter;
  sol.max_violation = violation;
  sol.converged = violation < config.tol;

  // Bias from free multipliers, else the midpoint of the feasible interval.
  bool any_nonzero = false;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  long free_count = 0;
  for (std::size_t t = 0; t < n2; ++t) {
    const double yg = sign[t] * grad[t];
    if (alpha[t] > 0.0) any_nonzero = true;
    if (upper(t)) {
      if (sign[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (sign[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  if (!any_nonzero) {
    sol.bias = mean(y);
  } else {
    sol.bias = -(free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0);
  }

  // a_i * a_i^* = 0 at the optimum; collapsing each pair to its difference
  // keeps the predictor and the equality constraint and cannot raise the objective.
  sol.alpha.resize(l);
  sol.alpha_star.resize(l);
  std::vector<double> beta(l);
  for (std::size_t t = 0; t < l; ++t) {
    beta[t] = alpha[t] - alpha[t + l];
    sol.alpha[t] = std::max(beta[t], 0.0);
    sol.alpha_star[t] = std::max(-beta[t], 0.0);
  }
  for (std::size_t t = 0; t < l; ++t) {
    if (beta[t] != 0.0) {
      sol.support_indices.push_back(t);
      sol.coef.push_back(beta[t]);
    }
  }
  sol.support_vectors.resize(static_cast<Eigen::Index>(sol.support_indices.size()), x.cols());
  for (std::size_t s = 0; s < sol.support_indices.size(); ++s) {
    sol.support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(static_cast<Eigen::Index>(sol.support_indices[s]));
  }
  // 1/2 b'Kb - y'b + eps*sum|b| via the cached gradient G_t = (Q alpha)_t + p_t,
  // less the epsilon charge removed by the collapse above.
  double obj = 0.0;
  for (std::size_t t = 0; t < n2; ++t) {
    const double p = t < l ? config.epsilon - y[t] : config.epsilon + y[t - l];
    obj += alpha[t] * (grad[t] + p);
  }
  double overlap = 0.0;
  for (std::size_t t = 0; t < l; ++t) overlap += std::min(alpha[t], alpha[t + l]);
  sol.dual_objective = 0.5 * obj - 2.0 * config.epsilon * overlap;
  return sol;
}

double SvrSolution::predict(std::span<const double> row) const {
  double f = bias;
  const auto d = static_cast<std::size_t>(support_vectors.cols());
  for (std::size_t s = 0; s < coef.size(); ++s) {
    std::span<const double> sv(support_vectors.data() + s * d, d);
    f += coef[s] * kernel_value(kernel, gamma, sv, row);
  }
  return f;
}

double svr_dual_objective(const Matrix& x, std::span<const double> y, std::span<const double> beta,
                          KernelKind kernel, double gamma, double epsilon) {
  const auto n = static_cast<std::size_t>(x.rows());
  double quad = 0.0;
  double lin = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (beta[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (beta[j] == 0.0) continue;
      quad += beta[i] * beta[j] * kernel_value(kernel, gamma, row_of(x, i), row_of(x, j));
    }
    lin += -y[i] * beta[i] + epsilon * std::abs(beta[i]);
  }
  return 0.5 * quad + lin;
}

}  // namespace gridcast
