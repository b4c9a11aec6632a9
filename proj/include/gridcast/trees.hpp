#pragma once

#include "gridcast/numeric.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gridcast {

// Per-feature split candidates. A value x falls in bin b when
// edges[b - 1] < x <= edges[b]; the last bin is open above.
class FeatureBins {
 public:
  // max_bins == 0 keeps one bin per distinct value, which makes the
  // histogram search an exact search over all midpoints.
  static FeatureBins fit(const Matrix& x, int max_bins);

  std::size_t features() const { return edges_.size(); }
  std::size_t bin_count(std::size_t f) const { return edges_[f].size() + 1; }
  const std::vector<double>& edges(std::size_t f) const { return edges_[f]; }
  std::uint32_t bin_of(std::size_t f, double value) const;
  // Offset of feature f inside a concatenated histogram.
  std::size_t offset(std::size_t f) const { return offsets_[f]; }
  std::size_t total_bins() const { return offsets_.back(); }

 private:
  std::vector<std::vector<double>> edges_;
  std::vector<std::size_t> offsets_;
};

// Bin codes stored feature-major: code(f, row) = codes[f * rows + row].
struct BinnedMatrix {
  FeatureBins bins;
  std::size_t rows = 0;
  std::vector<std::uint32_t> codes;

  static BinnedMatrix build(const Matrix& x, int max_bins);
  std::uint32_t code(std::size_t f, std::size_t row) const { return codes[f * rows + row]; }
};

struct GradientPair {
  double g = 0.0;
  double h = 0.0;
};

// Squared-loss structure score G^2 / (H + lambda); 0 on an empty side.
inline double leaf_score(double g, double h, double lambda) {
  const double denom = h + lambda;
  return denom > 0.0 ? g * g / denom : 0.0;
}
inline double leaf_weight(double g, double h, double lambda) {
  const double denom = h + lambda;
  return denom > 0.0 ? -g / denom : 0.0;
}

struct SplitChoice {
  int feature = -1;
  std::uint32_t bin = 0;
  double threshold = 0.0;
  double gain = 0.0;

  bool valid() const { return feature >= 0; }
};

struct SplitSearchParams {
  double lambda = 0.0;
  int min_leaf = 1;
};

// Best binary split of `rows` (ascending indices). Gain is the reduction of
// the regularized squared-error objective; with h = 1 and lambda = 0 it equals
// the SSE reduction. Ties go to the lowest feature, then the lowest threshold.
SplitChoice find_best_split(const BinnedMatrix& data, std::span<const GradientPair> grad,
                            std::span<const std::uint32_t> rows, const SplitSearchParams& params);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  std::uint32_t bin = 0;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> row) const;
  double predict_binned(const BinnedMatrix& data, std::size_t row) const;
  std::size_t leaf_count() const;
  int depth() const;
};

struct ObliviousTree {
  std::vector<int> features;
  std::vector<std::uint32_t> bins;
  std::vector<double> thresholds;
  std::vector<double> leaf_values;  // 2^depth entries

  std::size_t depth() const { return features.size(); }
  std::size_t leaf_index(std::span<const double> row) const;
  std::size_t leaf_index_binned(const BinnedMatrix& data, std::size_t row) const;
  double predict(std::span<const double> row) const { return leaf_values[leaf_index(row)]; }
};

// F(x) = base + learning_rate * sum_m tree_m(x)
struct TreeEnsemble {
  double base = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> row) const;
};

struct ObliviousEnsemble {
  double base = 0.0;
  double learning_rate = 0.1;
  std::vector<ObliviousTree> trees;

  double predict(std::span<const double> row) const;
};

struct GbrtConfig {
  int trees = 300;
  int depth = 4;
  double learning_rate = 0.1;
  double lambda = 0.0;
  int min_leaf = 1;
};

struct LightGbmConfig {
  int trees = 300;
  int max_leaves = 31;
  double learning_rate = 0.1;
  int bins = 255;
  bool goss = true;
  double goss_a = 0.2;
  double goss_b = 0.1;
  double lambda = 0.0;
  int min_leaf = 1;
};

struct CatBoostConfig {
  int trees = 300;
  int depth = 6;
  double learning_rate = 0.1;
  int permutations = 4;
  bool ordered = true;
  double lambda = 1.0;
  int bins = 255;
};

struct GbrtFit {
  TreeEnsemble ensemble;
  // Training MSE after each tree (entry 0 is the constant model).
  std::vector<double> train_mse;
};

GbrtFit fit_gbrt(const Matrix& x, std::span<const double> y, const GbrtConfig& config);

struct LightGbmFit {
  TreeEnsemble ensemble;
  std::vector<double> train_mse;
};

LightGbmFit fit_lightgbm(const Matrix& x, std::span<const double> y, const LightGbmConfig& config,
                         std::uint64_t seed);

struct CatBoostModel {
  // One ensemble per permutation; predictions are averaged.
  std::vector<ObliviousEnsemble> ensembles;

  double predict(std::span<const double> row) const;
};

CatBoostModel fit_catboost(const Matrix& x, std::span<const double> y, const CatBoostConfig& config,
                           std::uint64_t seed);

void validate(const GbrtConfig& config);
void validate(const LightGbmConfig& config);
void validate(const CatBoostConfig& config);

}  // namespace gridcast
