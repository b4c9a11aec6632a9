#pragma once

#include "gridcast/numeric.hpp"

#include <span>
#include <string>
#include <vector>

namespace gridcast {

enum class KernelKind { linear, rbf };

KernelKind parse_kernel(std::string_view name);
const char* kernel_name(KernelKind k);

struct SvrConfig {
  KernelKind kernel = KernelKind::rbf;
  double C = 10.0;
  double epsilon = 0.01;
  // <= 0 selects 1 / feature_count.
  double gamma = 0.0;
  double tol = 1e-6;
  // Iteration budget is max_passes * 2n working-pair updates.
  int max_passes = 100;
  // Above this size the kernel matrix is evaluated on demand instead of cached.
  double cache_mb = 1024.0;
};

void validate(const SvrConfig& config);

double kernel_value(KernelKind kind, double gamma, std::span<const double> a, std::span<const double> b);

struct SvrSolution {
  KernelKind kernel = KernelKind::rbf;
  double gamma = 1.0;
  double C = 1.0;
  double epsilon = 0.0;
  // Multipliers for every training point (a_i and a_i^*).
  std::vector<double> alpha;
  std::vector<double> alpha_star;
  // Support vectors and their coefficients a_i - a_i^*.
  std::vector<std::size_t> support_indices;
  std::vector<double> coef;
  Matrix support_vectors;
  double bias = 0.0;
  bool converged = false;
  long iterations = 0;
  double max_violation = 0.0;
  double dual_objective = 0.0;

  double predict(std::span<const double> row) const;
};

SvrSolution fit_svr(const Matrix& x, std::span<const double> y, const SvrConfig& config);

// Dual objective in difference form: 1/2 b'Kb - y'b + eps * sum|b|, b = a - a*.
double svr_dual_objective(const Matrix& x, std::span<const double> y, std::span<const double> beta,
                          KernelKind kernel, double gamma, double epsilon);

}  // namespace gridcast
