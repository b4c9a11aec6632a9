#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace gridcast {

// Pairs with |y| below this are left out of relative-error measures.
inline constexpr double kRelativeErrorCutoff = 0.01;

struct MetricsRecord {
  double mse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
  double mape = 0.0;  // percent
  std::size_t n_evaluated = 0;
  std::size_t n_excluded = 0;
};

// Pairs with an absent prediction are dropped first; MSE, MAE and R2 use every
// remaining pair. n_evaluated counts pairs that also clear the MAPE cutoff and
// n_excluded counts the rest, so the two always sum to the input length.
MetricsRecord compute_metrics(std::span<const double> actual, std::span<const std::optional<double>> predicted);
MetricsRecord compute_metrics(std::span<const double> actual, std::span<const double> predicted);

// Percentage of pairs with |y - yhat| / |y| <= threshold, over pairs with
// |y| >= cutoff and a present prediction.
double accuracy_within(std::span<const double> actual, std::span<const std::optional<double>> predicted,
                       double threshold);
double accuracy_within(std::span<const double> actual, std::span<const double> predicted, double threshold);

}  // namespace gridcast
