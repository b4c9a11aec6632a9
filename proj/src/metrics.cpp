#include "gridcast/metrics.hpp"

#include "gridcast/error.hpp"

#include <cmath>
#include <string>

namespace gridcast {

namespace {

void check_lengths(std::size_t a, std::size_t p) {
  if (a != p) {
    throw DataError("metrics: " + std::to_string(a) + " actual values vs " + std::to_string(p) + " predictions");
  }
}

std::vector<std::optional<double>> wrap(std::span<const double> v) { return {v.begin(), v.end()}; }

}  // namespace

MetricsRecord compute_metrics(std::span<const double> actual, std::span<const std::optional<double>> predicted) {
  check_lengths(actual.size(), predicted.size());
  std::size_t present = 0;
  double sum_y = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (predicted[i]) {
      ++present;
      sum_y += actual[i];
    }
  }
  if (present < 2) throw DataError("metrics: fewer than 2 evaluated pairs");
  const double y_bar = sum_y / static_cast<double>(present);

  MetricsRecord r;
  double sse = 0.0, sst = 0.0, sae = 0.0, sape = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (!predicted[i]) continue;
    const double y = actual[i];
    const double e = *predicted[i] - y;
    sse += e * e;
    sae += std::abs(e);
    sst += (y - y_bar) * (y - y_bar);
    if (std::abs(y) >= kRelativeErrorCutoff) {
      sape += std::abs(e) / std::abs(y);
      ++r.n_evaluated;
    }
  }
  r.n_excluded = actual.size() - r.n_evaluated;
  const auto n = static_cast<double>(present);
  r.mse = sse / n;
  r.mae = sae / n;
  r.mape = r.n_evaluated > 0 ? 100.0 * sape / static_cast<double>(r.n_evaluated) : 0.0;
  if (sst == 0.0) {
    if (sse != 0.0) throw NumericError("metrics: undefined R2 (actual values have zero variance)");
    r.r2 = 1.0;
  } else {
    r.r2 = 1.0 - sse / sst;
  }
  return r;
}

MetricsRecord compute_metrics(std::span<const double> actual, std::span<const double> predicted) {
  check_lengths(actual.size(), predicted.size());
  const auto wrapped = wrap(predicted);
  return compute_metrics(actual, wrapped);
}

double accuracy_within(std::span<const double> actual, std::span<const std::optional<double>> predicted,
                       double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("accuracy threshold must be positive");
  check_lengths(actual.size(), predicted.size());
  std::size_t evaluated = 0;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (!predicted[i] || std::abs(actual[i]) < kRelativeErrorCutoff) continue;
    ++evaluated;
    if (std::abs(actual[i] - *predicted[i]) / std::abs(actual[i]) <= threshold) ++inside;
  }
  if (evaluated == 0) throw DataError("accuracy: no pairs above the relative-error cutoff");
  return 100.0 * static_cast<double>(inside) / static_cast<double>(evaluated);
}

double accuracy_within(std::span<const double> actual, std::span<const double> predicted, double threshold) {
  check_lengths(actual.size(), predicted.size());
  const auto wrapped = wrap(predicted);
  return accuracy_within(actual, wrapped, threshold);
}

}  // namespace gridcast
