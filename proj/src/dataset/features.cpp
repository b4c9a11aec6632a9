#include "gridcast/dataset.hpp"
#include "gridcast/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

namespace gridcast {

std::vector<double> FeatureTable::column(std::size_t c) const {
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

std::optional<std::size_t> FeatureTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < column_names.size(); ++i) {
    if (column_names[i] == name) return i;
  }
  return std::nullopt;
}

FeatureTable FeatureTable::slice_rows(std::size_t begin, std::size_t end) const {
  FeatureTable out;
  out.column_names = column_names;
  out.dropped_columns = dropped_columns;
  const auto count = static_cast<Eigen::Index>(end - begin);
  out.features = features.middleRows(static_cast<Eigen::Index>(begin), count);
  out.target_price.assign(target_price.begin() + begin, target_price.begin() + end);
  out.target_demand.assign(target_demand.begin() + begin, target_demand.begin() + end);
  out.row_timestamps.assign(row_timestamps.begin() + begin, row_timestamps.begin() + end);
  return out;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct WindowStats {
  double mean = kNaN;
  double sd = kNaN;
  double min = kNaN;
};

// Statistics over series[t - w .. t - 1]; NaN when any value is missing.
WindowStats trailing_stats(const std::vector<double>& series, std::size_t t, std::size_t w) {
  WindowStats s;
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t k = t - w; k < t; ++k) {
    if (!std::isfinite(series[k])) return s;
    sum += series[k];
    lo = std::min(lo, series[k]);
  }
  const double m = sum / static_cast<double>(w);
  double ss = 0.0;
  for (std::size_t k = t - w; k < t; ++k) ss += (series[k] - m) * (series[k] - m);
  s.mean = m;
  s.sd = w > 1 ? std::sqrt(ss / static_cast<double>(w - 1)) : 0.0;
  s.min = lo;
  return s;
}

}  // namespace

FeatureTable build_features(const RawSeries& raw) {
  const std::size_t n = raw.size();
  if (n < 2 * kWarmupRows) {
    throw DataError("series has " + std::to_string(n) + " rows; feature building needs at least " +
                    std::to_string(2 * kWarmupRows));
  }
  if (raw.price.size() != n || raw.demand.size() != n) {
    throw DataError("raw series columns have inconsistent lengths");
  }

  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;
  const std::size_t out_rows = n - kWarmupRows;
  const auto add = [&](std::string name) {
    names.push_back(std::move(name));
    cols.emplace_back(out_rows, kNaN);
    return cols.size() - 1;
  };

  const std::pair<const char*, const std::vector<double>*> sources[] = {{"price", &raw.price},
                                                                        {"demand", &raw.demand}};
  for (const auto& [label, series] : sources) {
    const std::string prefix = label;
    for (int k : kLags) {
      const auto c = add(prefix + "_lag_" + std::to_string(k));
      for (std::size_t t = kWarmupRows; t < n; ++t) cols[c][t - kWarmupRows] = (*series)[t - k];
    }
    for (int w : kRollingWindows) {
      const auto cm = add(prefix + "_roll_mean_" + std::to_string(w));
      const auto cs = add(prefix + "_roll_std_" + std::to_string(w));
      const auto cn = add(prefix + "_roll_min_" + std::to_string(w));
      for (std::size_t t = kWarmupRows; t < n; ++t) {
        const auto s = trailing_stats(*series, t, static_cast<std::size_t>(w));
        cols[cm][t - kWarmupRows] = s.mean;
        cols[cs][t - kWarmupRows] = s.sd;
        cols[cn][t - kWarmupRows] = s.min;
      }
    }
    const auto wm = add(prefix + "_window24_mean");
    const auto ws = add(prefix + "_window24_std");
    for (std::size_t t = kWarmupRows; t < n; ++t) {
      const auto s = trailing_stats(*series, t, 24);
      cols[wm][t - kWarmupRows] = s.mean;
      cols[ws][t - kWarmupRows] = s.sd;
    }
  }

  const auto hs = add("hour_sin");
  const auto hc = add("hour_cos");
  const auto ds = add("dow_sin");
  const auto dc = add("dow_cos");
  const auto ms = add("dom_sin");
  const auto mc = add("dom_cos");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t t = kWarmupRows; t < n; ++t) {
    const auto cal = local_calendar(raw.timestamps[t]);
    const std::size_t r = t - kWarmupRows;
    cols[hs][r] = std::sin(two_pi * cal.hour / 24.0);
    cols[hc][r] = std::cos(two_pi * cal.hour / 24.0);
    cols[ds][r] = std::sin(two_pi * cal.weekday / 7.0);
    cols[dc][r] = std::cos(two_pi * cal.weekday / 7.0);
    cols[ms][r] = std::sin(two_pi * (cal.day - 1) / cal.days_in_month);
    cols[mc][r] = std::cos(two_pi * (cal.day - 1) / cal.days_in_month);
  }

  const auto ix = add("price_x_demand_lag_1");
  for (std::size_t t = kWarmupRows; t < n; ++t) {
    cols[ix][t - kWarmupRows] = raw.price[t - 1] * raw.demand[t - 1];
  }

  for (const char* name : kPredispatchColumns) {
    auto it = raw.predispatch.find(name);
    if (it == raw.predispatch.end()) continue;
    if (it->second.size() != n) throw DataError(std::string("column ") + name + " has inconsistent length");
    const auto c = add(name);
    for (std::size_t t = kWarmupRows; t < n; ++t) cols[c][t - kWarmupRows] = it->second[t];
  }

  FeatureTable table;
  table.column_names = std::move(names);
  table.features.resize(static_cast<Eigen::Index>(out_rows), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (std::size_t r = 0; r < out_rows; ++r) {
      table.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cols[c][r];
    }
  }
  table.target_price.assign(raw.price.begin() + kWarmupRows, raw.price.end());
  table.target_demand.assign(raw.demand.begin() + kWarmupRows, raw.demand.end());
  table.row_timestamps.assign(raw.timestamps.begin() + kWarmupRows, raw.timestamps.end());
  return table;
}

FeatureTable clean(const FeatureTable& table) {
  const std::size_t n = table.rows();
  const std::size_t p = table.cols();

  // Columns 0..p-1 are features, p and p+1 the two targets.
  std::vector<std::vector<double>> cols(p + 2);
  for (std::size_t c = 0; c < p; ++c) cols[c] = table.column(c);
  cols[p] = table.target_price;
  cols[p + 1] = table.target_demand;
  const auto col_name = [&](std::size_t c) -> std::string {
    if (c < p) return table.column_names[c];
    return c == p ? "target_price" : "target_demand";
  };

  std::size_t first_complete = 0;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    auto& col = cols[c];
    std::size_t first_valid = n;
    double last = kNaN;
    for (std::size_t r = 0; r < n; ++r) {
      if (std::isfinite(col[r])) {
        last = col[r];
        if (first_valid == n) first_valid = r;
      } else {
        col[r] = last;
      }
    }
    if (first_valid == n) {
      throw DataError("column '" + col_name(c) + "' has no valid values");
    }
    first_complete = std::max(first_complete, first_valid);
  }

  FeatureTable out;
  out.column_names = table.column_names;
  out.dropped_columns = table.dropped_columns;
  const std::size_t kept = n - first_complete;
  out.features.resize(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(p));
  for (std::size_t c = 0; c < p; ++c) {
    std::span<const double> surviving(cols[c].data() + first_complete, kept);
    const double mu = mean(surviving);
    const double sd = sample_sd(surviving);
    const double lo = mu - 3.0 * sd;
    const double hi = mu + 3.0 * sd;
    for (std::size_t r = 0; r < kept; ++r) {
      out.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          std::clamp(surviving[r], lo, hi);
    }
  }
  out.target_price.assign(cols[p].begin() + first_complete, cols[p].end());
  out.target_demand.assign(cols[p + 1].begin() + first_complete, cols[p + 1].end());
  out.row_timestamps.assign(table.row_timestamps.begin() + first_complete, table.row_timestamps.end());
  return out;
}

FeatureTable prune_correlated(const FeatureTable& table, double threshold) {
  const std::size_t p = table.cols();
  std::vector<std::vector<double>> cols(p);
  for (std::size_t c = 0; c < p; ++c) cols[c] = table.column(c);
  std::vector<bool> dropped(p, false);
  std::vector<std::string> dropped_names = table.dropped_columns;
  if (table.rows() >= 2) {
    for (std::size_t i = 0; i < p; ++i) {
      if (dropped[i]) continue;
      for (std::size_t j = i + 1; j < p; ++j) {
        if (dropped[j]) continue;
        if (std::abs(pearson(cols[i], cols[j])) > threshold) {
          dropped[j] = true;
          dropped_names.push_back(table.column_names[j]);
        }
      }
    }
  }
  std::vector<Eigen::Index> keep;
  FeatureTable out;
  for (std::size_t c = 0; c < p; ++c) {
    if (!dropped[c]) {
      keep.push_back(static_cast<Eigen::Index>(c));
      out.column_names.push_back(table.column_names[c]);
    }
  }
  out.features.resize(table.features.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.features.col(static_cast<Eigen::Index>(k)) = table.features.col(keep[k]);
  }
  out.target_price = table.target_price;
  out.target_demand = table.target_demand;
  out.row_timestamps = table.row_timestamps;
  out.dropped_columns = std::move(dropped_names);
  return out;
}

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  const auto num = [](double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
  };
  out << "row_timestamp";
  for (const auto& name : table.column_names) out << ',' << name;
  out << ",target_price,target_demand\n";
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << format_timestamp(table.row_timestamps[r]);
    for (std::size_t c = 0; c < table.cols(); ++c) {
      out << ',' << num(table.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    }
    out << ',' << num(table.target_price[r]) << ',' << num(table.target_demand[r]) << '\n';
  }
}

SplitIndices split_point(std::size_t n, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("split ratio must lie in (0, 1)");
  }
  // The small epsilon absorbs representation error in products like 0.85 * 100.
  const auto train_end = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  if (train_end < 1 || train_end >= n) {
    throw DataError("too few rows (" + std::to_string(n) + ") for a chronological split");
  }
  return SplitIndices{train_end, ratio};
}

TrainTestSplit chronological_split(const FeatureTable& table, double ratio) {
  const auto idx = split_point(table.rows(), ratio);
  return TrainTestSplit{table.slice_rows(0, idx.train_end), table.slice_rows(idx.train_end, table.rows()), idx};
}

}  // namespace gridcast
