#pragma once

#include "gridcast/numeric.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gridcast {

// An instant with the UTC offset it was written in. Calendar features use
// local wall-clock time.
struct Timestamp {
  std::int64_t epoch_seconds = 0;
  int offset_minutes = 0;

  std::int64_t local_seconds() const { return epoch_seconds + 60LL * offset_minutes; }

  auto operator<=>(const Timestamp& other) const { return epoch_seconds <=> other.epoch_seconds; }
  bool operator==(const Timestamp& other) const { return epoch_seconds == other.epoch_seconds; }
};

// Parses `YYYY-MM-DDTHH:MM[:SS][Z|+HH:MM|-HH:MM]`; a space may replace the T.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(const Timestamp& ts);

struct LocalCalendar {
  int year;
  int month;       // 1..12
  int day;         // 1..31
  int weekday;     // 0 = Monday
  double hour;     // fractional hour of day
  int days_in_month;
};
LocalCalendar local_calendar(const Timestamp& ts);

inline constexpr const char* kPredispatchColumns[] = {
    "pred_price_avg32", "pred_price_best32", "pred_demand_avg32", "pred_demand_best32"};

struct RawSeries {
  std::vector<Timestamp> timestamps;
  std::vector<double> price;
  std::vector<double> demand;
  // Keyed by column name; present only when the source provides them.
  std::map<std::string, std::vector<double>> predispatch;

  std::size_t size() const { return timestamps.size(); }
};

RawSeries load_csv(const std::filesystem::path& path);
void write_csv(const RawSeries& raw, const std::filesystem::path& path);

// Synthetic 30-minute market series. Requires n >= 200.
RawSeries gen_synthetic(std::size_t n, std::uint64_t seed);

enum class Target { price, demand };
const char* target_name(Target t);

struct FeatureTable {
  std::vector<std::string> column_names;
  Matrix features;
  std::vector<double> target_price;
  std::vector<double> target_demand;
  std::vector<Timestamp> row_timestamps;
  // Columns removed by prune_correlated, in removal order.
  std::vector<std::string> dropped_columns;

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }
  const std::vector<double>& target(Target t) const {
    return t == Target::price ? target_price : target_demand;
  }
  std::vector<double>& target(Target t) { return t == Target::price ? target_price : target_demand; }
  std::vector<double> column(std::size_t c) const;
  std::optional<std::size_t> column_index(std::string_view name) const;

  FeatureTable slice_rows(std::size_t begin, std::size_t end) const;
};

inline constexpr std::size_t kWarmupRows = 24;
inline constexpr int kLags[] = {1, 3, 6, 12, 24};
inline constexpr int kRollingWindows[] = {6, 12, 24};

FeatureTable build_features(const RawSeries& raw);
FeatureTable clean(const FeatureTable& table);
FeatureTable prune_correlated(const FeatureTable& table, double threshold = 0.95);

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path);

struct SplitIndices {
  std::size_t train_end = 0;
  double ratio = 0.85;
};

// floor(ratio * n) training rows; both sides must be non-empty.
SplitIndices split_point(std::size_t n, double ratio = 0.85);

struct TrainTestSplit {
  FeatureTable train;
  FeatureTable test;
  SplitIndices indices;
};
TrainTestSplit chronological_split(const FeatureTable& table, double ratio = 0.85);

struct MinMax {
  double min = 0.0;
  double max = 0.0;

  bool operator==(const MinMax&) const = default;
};

struct NormalizationParams {
  std::vector<std::string> column_names;
  std::vector<MinMax> columns;
  MinMax price;
  MinMax demand;

  // Range for a feature column or for `target_price` / `target_demand`.
  const MinMax& range(std::string_view column) const;

  bool operator==(const NormalizationParams&) const = default;
};

NormalizationParams fit_minmax(const FeatureTable& train);
FeatureTable apply_minmax(const FeatureTable& rows, const NormalizationParams& params);
double apply_minmax(double value, const MinMax& range);
double invert_minmax(double value, const MinMax& range);
std::vector<double> invert_minmax(std::span<const double> values, const NormalizationParams& params,
                                  std::string_view column);

}  // namespace gridcast
