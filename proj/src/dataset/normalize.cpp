#include "gridcast/dataset.hpp"
#include "gridcast/error.hpp"

#include <algorithm>

namespace gridcast {
namespace {

MinMax range_of(std::span<const double> values) {
  MinMax r{values.front(), values.front()};
  for (double v : values) {
    r.min = std::min(r.min, v);
    r.max = std::max(r.max, v);
  }
  return r;
}

}  // namespace

const MinMax& NormalizationParams::range(std::string_view column) const {
  if (column == "target_price") return price;
  if (column == "target_demand") return demand;
  for (std::size_t i = 0; i < column_names.size(); ++i) {
    if (column_names[i] == column) return columns[i];
  }
  throw DataError("unknown column: " + std::string(column));
}

NormalizationParams fit_minmax(const FeatureTable& train) {
  if (train.rows() == 0) {
    throw DataError("cannot fit normalization on an empty training set");
  }
  NormalizationParams params;
  params.column_names = train.column_names;
  params.columns.reserve(train.cols());
  for (std::size_t c = 0; c < train.cols(); ++c) {
    params.columns.push_back(range_of(train.column(c)));
  }
  params.price = range_of(train.target_price);
  params.demand = range_of(train.target_demand);
  return params;
}

double apply_minmax(double value, const MinMax& range) {
  const double width = range.max - range.min;
  if (width == 0.0) return 0.0;
  return (value - range.min) / width;
}

double invert_minmax(double value, const MinMax& range) {
  const double width = range.max - range.min;
  if (width == 0.0) return range.min;
  return value * width + range.min;
}

FeatureTable apply_minmax(const FeatureTable& rows, const NormalizationParams& params) {
  FeatureTable out;
  out.column_names = rows.column_names;
  out.dropped_columns = rows.dropped_columns;
  out.row_timestamps = rows.row_timestamps;
  out.features.resize(rows.features.rows(), rows.features.cols());
  for (std::size_t c = 0; c < rows.cols(); ++c) {
    const MinMax& r = params.range(rows.column_names[c]);
    const auto col = static_cast<Eigen::Index>(c);
    for (Eigen::Index i = 0; i < rows.features.rows(); ++i) {
      out.features(i, col) = apply_minmax(rows.features(i, col), r);
    }
  }
  out.target_price.reserve(rows.target_price.size());
  for (double v : rows.target_price) out.target_price.push_back(apply_minmax(v, params.price));
  out.target_demand.reserve(rows.target_demand.size());
  for (double v : rows.target_demand) out.target_demand.push_back(apply_minmax(v, params.demand));
  return out;
}

std::vector<double> invert_minmax(std::span<const double> values, const NormalizationParams& params,
                                  std::string_view column) {
  const MinMax& r = params.range(column);
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(invert_minmax(v, r));
  return out;
}

}  // namespace gridcast
