#include "gridcast/error.hpp"
#include "gridcast/trees.hpp"

#include <numeric>

namespace gridcast {

void validate(const GbrtConfig& c) {
  if (c.trees < 0) throw ConfigError("gbrt: tree count must be non-negative");
  if (c.depth < 1) throw ConfigError("gbrt: depth must be at least 1");
  if (!(c.learning_rate >= 0.0 && c.learning_rate <= 1.0)) {
    throw ConfigError("gbrt: learning rate must lie in [0, 1]");
  }
  if (c.lambda < 0.0) throw ConfigError("gbrt: lambda must be non-negative");
  if (c.min_leaf < 1) throw ConfigError("gbrt: min_leaf must be at least 1");
}

namespace {

double mse(std::span<const double> f, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (f[i] - y[i]) * (f[i] - y[i]);
  return s / static_cast<double>(y.size());
}

// Level-by-level growth; every node at the current depth with a positive-gain
// split is expanded.
RegressionTree grow_depthwise(const BinnedMatrix& data, std::span<const GradientPair> grad, int max_depth,
                              const SplitSearchParams& params) {
  RegressionTree tree;
  std::vector<std::vector<std::uint32_t>> node_rows;
  std::vector<std::uint32_t> all(data.rows);
  std::iota(all.begin(), all.end(), 0u);
  tree.nodes.emplace_back();
  node_rows.push_back(std::move(all));

  std::vector<std::size_t> frontier{0};
  for (int level = 0; level < max_depth && !frontier.empty(); ++level) {
    std::vector<std::size_t> next;
    for (std::size_t id : frontier) {
      const SplitChoice split = find_best_split(data, grad, node_rows[id], params);
      if (!split.valid()) continue;
      std::vector<std::uint32_t> left;
      std::vector<std::uint32_t> right;
      for (std::uint32_t r : node_rows[id]) {
        (data.code(static_cast<std::size_t>(split.feature), r) <= split.bin ? left : right).push_back(r);
      }
      const auto l = tree.nodes.size();
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[id];
      node.feature = split.feature;
      node.bin = split.bin;
      node.threshold = split.threshold;
      node.left = static_cast<int>(l);
      node.right = static_cast<int>(l + 1);
      node_rows.push_back(std::move(left));
      node_rows.push_back(std::move(right));
      node_rows[id].clear();
      next.push_back(l);
      next.push_back(l + 1);
    }
    frontier = std::move(next);
  }
  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    if (tree.nodes[id].feature >= 0) continue;
    double g = 0.0;
    double h = 0.0;
    for (std::uint32_t r : node_rows[id]) {
      g += grad[r].g;
      h += grad[r].h;
    }
    tree.nodes[id].value = leaf_weight(g, h, params.lambda);
  }
  return tree;
}

}  // namespace

GbrtFit fit_gbrt(const Matrix& x, std::span<const double> y, const GbrtConfig& config) {
  validate(config);
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0 || y.size() != n) throw DataError("gbrt: empty or misaligned training data");

  GbrtFit fit;
  fit.ensemble.base = mean(y);
  fit.ensemble.learning_rate = config.learning_rate;
  std::vector<double> f(n, fit.ensemble.base);
  fit.train_mse.push_back(mse(f, y));
  if (config.trees == 0) return fit;

  const BinnedMatrix data = BinnedMatrix::build(x, 0);
  const SplitSearchParams params{config.lambda, config.min_leaf};
  std::vector<GradientPair> grad(n);
  for (int m = 0; m < config.trees; ++m) {
    for (std::size_t i = 0; i < n; ++i) grad[i] = {f[i] - y[i], 1.0};
    RegressionTree tree = grow_depthwise(data, grad, config.depth, params);
    for (std::size_t i = 0; i < n; ++i) f[i] += config.learning_rate * tree.predict_binned(data, i);
    fit.ensemble.trees.push_back(std::move(tree));
    fit.train_mse.push_back(mse(f, y));
  }
  return fit;
}

}  // namespace gridcast
