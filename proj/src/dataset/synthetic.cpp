#include "gridcast/dataset.hpp"
#include "gridcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gridcast {
namespace {

// Generator constants (original units: MW and $/MWh).
constexpr std::int64_t kStepSeconds = 1800;
constexpr double kBaseDemand = 1500.0;
constexpr double kDailyAmplitude = 220.0;
constexpr double kEveningAmplitude = 70.0;
constexpr double kWeeklyAmplitude = 60.0;
constexpr double kNoisePersistence = 0.9;
constexpr double kNoiseInnovation = 20.0;

constexpr double kPriceIntercept = -60.0;
constexpr double kPricePerMw = 0.11;
constexpr double kPriceNoise = 6.0;

constexpr double kSpikeScale = 120.0;
constexpr double kSpikeTailIndex = 3.0;
constexpr double kSpikeCap = 2500.0;
constexpr double kSpikeStay = 0.65;
constexpr double kNegativeStay = 0.75;

}  // namespace

RawSeries gen_synthetic(std::size_t n, std::uint64_t seed) {
  if (n < 200) {
    throw ConfigError("synthetic series needs at least 200 rows (got " + std::to_string(n) + ")");
  }
  Rng root(seed);
  Rng demand_rng = root.derive("demand");
  Rng price_rng = root.derive("price");
  Rng forecast_rng = root.derive("predispatch");

  // 2023-05-01T00:00:00+09:30
  const Timestamp start = parse_timestamp("2023-05-01T00:00:00+09:30");
  constexpr double two_pi = 2.0 * std::numbers::pi;

  RawSeries raw;
  raw.timestamps.reserve(n);
  raw.price.reserve(n);
  raw.demand.reserve(n);
  double ar = 0.0;
  bool spiking = false;
  bool negative = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Timestamp ts{start.epoch_seconds + static_cast<std::int64_t>(i) * kStepSeconds, start.offset_minutes};
    const auto cal = local_calendar(ts);
    const double week_phase = (cal.weekday + cal.hour / 24.0) / 7.0;

    ar = kNoisePersistence * ar + demand_rng.normal(0.0, kNoiseInnovation);
    const double demand = kBaseDemand + kDailyAmplitude * std::sin(two_pi * (cal.hour - 10.0) / 24.0) +
                          kEveningAmplitude * std::sin(2.0 * two_pi * (cal.hour - 13.0) / 24.0) +
                          kWeeklyAmplitude * std::cos(two_pi * week_phase) + ar;

    // Scarcity spikes get likelier at high demand, negative prices at low demand.
    const double spike_enter = 0.004 + 0.06 * sigmoid((demand - 1700.0) / 40.0);
    const double negative_enter = 0.003 + 0.08 * sigmoid((1350.0 - demand) / 40.0);
    spiking = price_rng.uniform() < (spiking ? kSpikeStay : spike_enter);
    negative = !spiking && price_rng.uniform() < (negative ? kNegativeStay : negative_enter);

    double price = kPriceIntercept + kPricePerMw * demand + price_rng.normal(0.0, kPriceNoise);
    if (spiking) {
      double u = price_rng.uniform();
      u = std::max(u, 1e-12);
      price += std::min(kSpikeCap, kSpikeScale * std::pow(u, -1.0 / kSpikeTailIndex));
    } else if (negative) {
      price = -price_rng.uniform(5.0, 60.0);
    }

    raw.timestamps.push_back(ts);
    raw.demand.push_back(demand);
    raw.price.push_back(price);
  }

  auto& avg_p = raw.predispatch["pred_price_avg32"];
  auto& best_p = raw.predispatch["pred_price_best32"];
  auto& avg_d = raw.predispatch["pred_demand_avg32"];
  auto& best_d = raw.predispatch["pred_demand_best32"];
  for (std::size_t i = 0; i < n; ++i) {
    avg_p.push_back(raw.price[i] + forecast_rng.normal(0.0, 30.0));
    best_p.push_back(raw.price[i] + forecast_rng.normal(0.0, 15.0));
    avg_d.push_back(raw.demand[i] + forecast_rng.normal(0.0, 35.0));
    best_d.push_back(raw.demand[i] + forecast_rng.normal(0.0, 15.0));
  }
  return raw;
}

}  // namespace gridcast
