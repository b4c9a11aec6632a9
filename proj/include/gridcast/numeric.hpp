#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace gridcast {

// Row-major dense matrix used for feature tables (rows = samples).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Seeded generator. Draw conversions are implemented here rather than via
// <random> distributions so streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  // Child stream keyed by (seed, label); never depends on draws already made.
  Rng derive(std::string_view label) const;

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_label(std::string_view label);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> softmax(std::span<const double> scores);

// Pearson correlation; 0 when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);
// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> x);

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
std::vector<double> finite_difference_gradient(const ScalarFunction& f, std::span<const double> x,
                                               double h);

// Largest |a - b| / max(|a|, |b|, floor) over paired entries.
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-8);

}  // namespace gridcast
