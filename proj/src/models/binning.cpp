#include "gridcast/trees.hpp"

#include <algorithm>
#include <cmath>

namespace gridcast {
namespace {

// Midpoint strictly below `hi` so that `lo` and `hi` land on different sides.
double split_between(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

}  // namespace

FeatureBins FeatureBins::fit(const Matrix& x, int max_bins) {
  FeatureBins bins;
  const auto n = static_cast<std::size_t>(x.rows());
  bins.edges_.resize(static_cast<std::size_t>(x.cols()));
  std::vector<double> sorted(n);
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    for (std::size_t i = 0; i < n; ++i) sorted[i] = x(static_cast<Eigen::Index>(i), f);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct;
    for (double v : sorted) {
      if (distinct.empty() || v != distinct.back()) distinct.push_back(v);
    }
    auto& edges = bins.edges_[static_cast<std::size_t>(f)];
    if (max_bins <= 0 || distinct.size() <= static_cast<std::size_t>(max_bins)) {
      for (std::size_t j = 0; j + 1 < distinct.size(); ++j) edges.push_back(split_between(distinct[j], distinct[j + 1]));
      continue;
    }
    // Equal-frequency cuts, snapped to the boundary after the value at each
    // quantile rank.
    for (int q = 1; q < max_bins; ++q) {
      const std::size_t rank = (static_cast<std::size_t>(q) * n) / static_cast<std::size_t>(max_bins);
      if (rank == 0) continue;
      const double v = sorted[rank - 1];
      auto next = std::upper_bound(distinct.begin(), distinct.end(), v);
      if (next == distinct.end()) continue;
      const double edge = split_between(v, *next);
      if (edges.empty() || edge > edges.back()) edges.push_back(edge);
    }
  }
  bins.offsets_.assign(bins.edges_.size() + 1, 0);
  for (std::size_t f = 0; f < bins.edges_.size(); ++f) {
    bins.offsets_[f + 1] = bins.offsets_[f] + bins.edges_[f].size() + 1;
  }
  return bins;
}

std::uint32_t FeatureBins::bin_of(std::size_t f, double value) const {
  const auto& e = edges_[f];
  return static_cast<std::uint32_t>(std::lower_bound(e.begin(), e.end(), value) - e.begin());
}

BinnedMatrix BinnedMatrix::build(const Matrix& x, int max_bins) {
  BinnedMatrix m;
  m.bins = FeatureBins::fit(x, max_bins);
  m.rows = static_cast<std::size_t>(x.rows());
  m.codes.resize(m.rows * m.bins.features());
  for (std::size_t f = 0; f < m.bins.features(); ++f) {
    for (std::size_t i = 0; i < m.rows; ++i) {
      m.codes[f * m.rows + i] = m.bins.bin_of(f, x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)));
    }
  }
  return m;
}

SplitChoice find_best_split(const BinnedMatrix& data, std::span<const GradientPair> grad,
                            std::span<const std::uint32_t> rows, const SplitSearchParams& params) {
  SplitChoice best;
  if (rows.size() < 2) return best;
  double total_g = 0.0;
  double total_h = 0.0;
  for (std::uint32_t r : rows) {
    total_g += grad[r].g;
    total_h += grad[r].h;
  }
  const double parent = leaf_score(total_g, total_h, params.lambda);
  const auto total_n = static_cast<long>(rows.size());

  std::vector<double> hist_g;
  std::vector<double> hist_h;
  std::vector<long> hist_n;
  for (std::size_t f = 0; f < data.bins.features(); ++f) {
    const std::size_t nb = data.bins.bin_count(f);
    if (nb < 2) continue;
    hist_g.assign(nb, 0.0);
    hist_h.assign(nb, 0.0);
    hist_n.assign(nb, 0);
    const std::uint32_t* codes = data.codes.data() + f * data.rows;
    for (std::uint32_t r : rows) {
      const std::uint32_t b = codes[r];
      hist_g[b] += grad[r].g;
      hist_h[b] += grad[r].h;
      ++hist_n[b];
    }
    double gl = 0.0;
    double hl = 0.0;
    long nl = 0;
    for (std::size_t b = 0; b + 1 < nb; ++b) {
      gl += hist_g[b];
      hl += hist_h[b];
      nl += hist_n[b];
      if (hist_n[b] == 0) continue;
      if (nl < params.min_leaf) continue;
      const long nr = total_n - nl;
      if (nr < params.min_leaf) break;
      const double gr = total_g - gl;
      const double hr = total_h - hl;
      const double gain = leaf_score(gl, hl, params.lambda) + leaf_score(gr, hr, params.lambda) - parent;
      if (gain > best.gain) {
        best.feature = static_cast<int>(f);
        best.bin = static_cast<std::uint32_t>(b);
        best.threshold = data.bins.edges(f)[b];
        best.gain = gain;
      }
    }
  }
  return best;
}

double RegressionTree::predict(std::span<const double> row) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

double RegressionTree::predict_binned(const BinnedMatrix& data, std::size_t row) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = data.code(static_cast<std::size_t>(n.feature), row) <= n.bin ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
    deepest = std::max(deepest, d[i]);
  }
  return deepest;
}

std::size_t ObliviousTree::leaf_index(std::span<const double> row) const {
  std::size_t idx = 0;
  for (std::size_t level = 0; level < features.size(); ++level) {
    if (row[static_cast<std::size_t>(features[level])] > thresholds[level]) idx |= std::size_t{1} << level;
  }
  return idx;
}

std::size_t ObliviousTree::leaf_index_binned(const BinnedMatrix& data, std::size_t row) const {
  std::size_t idx = 0;
  for (std::size_t level = 0; level < features.size(); ++level) {
    if (data.code(static_cast<std::size_t>(features[level]), row) > bins[level]) idx |= std::size_t{1} << level;
  }
  return idx;
}

double TreeEnsemble::predict(std::span<const double> row) const {
  double f = base;
  for (const auto& t : trees) f += learning_rate * t.predict(row);
  return f;
}

double ObliviousEnsemble::predict(std::span<const double> row) const {
  double f = base;
  for (const auto& t : trees) f += learning_rate * t.predict(row);
  return f;
}

double CatBoostModel::predict(std::span<const double> row) const {
  double sum = 0.0;
  for (const auto& e : ensembles) sum += e.predict(row);
  return sum / static_cast<double>(ensembles.size());
}

}  // namespace gridcast
