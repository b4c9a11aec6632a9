#include "gridcast/error.hpp"
#include "gridcast/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gridcast {

void validate(const LightGbmConfig& c) {
  if (c.trees < 0) throw ConfigError("lightgbm: tree count must be non-negative");
  if (c.max_leaves < 2) throw ConfigError("lightgbm: max_leaves must be at least 2");
  if (!(c.learning_rate >= 0.0 && c.learning_rate <= 1.0)) {
    throw ConfigError("lightgbm: learning rate must lie in [0, 1]");
  }
  if (c.bins < 2) throw ConfigError("lightgbm: bins must be at least 2");
  if (c.goss) {
    if (!(c.goss_a > 0.0 && c.goss_a <= 1.0)) throw ConfigError("lightgbm: goss_a must lie in (0, 1]");
    if (!(c.goss_b >= 0.0 && c.goss_b <= 1.0 - c.goss_a + 1e-12)) {
      throw ConfigError("lightgbm: goss_b must lie in [0, 1 - goss_a]");
    }
  }
  if (c.lambda < 0.0) throw ConfigError("lightgbm: lambda must be non-negative");
  if (c.min_leaf < 1) throw ConfigError("lightgbm: min_leaf must be at least 1");
}

namespace {

struct Leaf {
  std::size_t node;
  std::vector<std::uint32_t> rows;
  SplitChoice split;
};

// Gradient-based one-side sampling. Returns the selected rows in ascending
// order and scales the gradients of the sampled small-gradient rows.
std::vector<std::uint32_t> goss_sample(std::vector<GradientPair>& grad, double a, double b, Rng& rng) {
  const std::size_t n = grad.size();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  const auto top = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(a * static_cast<double>(n))));
  if (top >= n) return order;
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t l, std::uint32_t r) {
    return std::abs(grad[l].g) > std::abs(grad[r].g);
  });
  std::vector<std::uint32_t> selected(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top));
  std::vector<std::uint32_t> rest(order.begin() + static_cast<std::ptrdiff_t>(top), order.end());
  const auto sample = std::min(rest.size(), static_cast<std::size_t>(std::floor(b * static_cast<double>(n))));
  if (sample > 0) {
    const double amplify = (1.0 - a) / b;
    // Partial Fisher-Yates over the small-gradient rows.
    for (std::size_t i = 0; i < sample; ++i) {
      const std::size_t j = i + rng.uniform_index(rest.size() - i);
      std::swap(rest[i], rest[j]);
      grad[rest[i]].g *= amplify;
      grad[rest[i]].h *= amplify;
      selected.push_back(rest[i]);
    }
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

RegressionTree grow_leafwise(const BinnedMatrix& data, std::span<const GradientPair> grad,
                             std::vector<std::uint32_t> rows, int max_leaves, const SplitSearchParams& params) {
  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<Leaf> leaves;
  leaves.push_back(Leaf{0, std::move(rows), {}});
  leaves.back().split = find_best_split(data, grad, leaves.back().rows, params);

  while (static_cast<int>(leaves.size()) < max_leaves) {
    std::size_t pick = leaves.size();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!leaves[i].split.valid()) continue;
      if (pick == leaves.size() || leaves[i].split.gain > leaves[pick].split.gain) pick = i;
    }
    if (pick == leaves.size()) break;
    Leaf parent = std::move(leaves[pick]);
    const SplitChoice& s = parent.split;
    std::vector<std::uint32_t> left;
    std::vector<std::uint32_t> right;
    for (std::uint32_t r : parent.rows) {
      (data.code(static_cast<std::size_t>(s.feature), r) <= s.bin ? left : right).push_back(r);
    }
    const std::size_t l = tree.nodes.size();
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[parent.node];
    node.feature = s.feature;
    node.bin = s.bin;
    node.threshold = s.threshold;
    node.left = static_cast<int>(l);
    node.right = static_cast<int>(l + 1);

    Leaf lc{l, std::move(left), {}};
    Leaf rc{l + 1, std::move(right), {}};
    lc.split = find_best_split(data, grad, lc.rows, params);
    rc.split = find_best_split(data, grad, rc.rows, params);
    leaves[pick] = std::move(lc);
    leaves.insert(leaves.begin() + static_cast<std::ptrdiff_t>(pick) + 1, std::move(rc));
  }
  for (const Leaf& leaf : leaves) {
    double g = 0.0;
    double h = 0.0;
    for (std::uint32_t r : leaf.rows) {
      g += grad[r].g;
      h += grad[r].h;
    }
    tree.nodes[leaf.node].value = leaf_weight(g, h, params.lambda);
  }
  return tree;
}

}  // namespace

LightGbmFit fit_lightgbm(const Matrix& x, std::span<const double> y, const LightGbmConfig& config,
                         std::uint64_t seed) {
  validate(config);
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0 || y.size() != n) throw DataError("lightgbm: empty or misaligned training data");

  LightGbmFit fit;
  fit.ensemble.base = mean(y);
  fit.ensemble.learning_rate = config.learning_rate;
  std::vector<double> f(n, fit.ensemble.base);
  const auto record_mse = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (f[i] - y[i]) * (f[i] - y[i]);
    fit.train_mse.push_back(s / static_cast<double>(n));
  };
  record_mse();
  if (config.trees == 0) return fit;

  const BinnedMatrix data = BinnedMatrix::build(x, config.bins);
  const SplitSearchParams params{config.lambda, config.min_leaf};
  Rng rng = Rng(seed).derive("goss");
  std::vector<GradientPair> grad(n);
  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  for (int m = 0; m < config.trees; ++m) {
    for (std::size_t i = 0; i < n; ++i) grad[i] = {f[i] - y[i], 1.0};
    std::vector<std::uint32_t> rows = config.goss ? goss_sample(grad, config.goss_a, config.goss_b, rng) : all;
    RegressionTree tree = grow_leafwise(data, grad, std::move(rows), config.max_leaves, params);
    for (std::size_t i = 0; i < n; ++i) f[i] += config.learning_rate * tree.predict_binned(data, i);
    fit.ensemble.trees.push_back(std::move(tree));
    record_mse();
  }
  return fit;
}

}  // namespace gridcast
