#include "gridcast/error.hpp"
#include "gridcast/trees.hpp"

#include <numeric>

namespace gridcast {

void validate(const CatBoostConfig& c) {
  if (c.trees < 0) throw ConfigError("catboost: tree count must be non-negative");
  if (c.depth < 1 || c.depth > 16) throw ConfigError("catboost: depth must lie in [1, 16]");
  if (!(c.learning_rate >= 0.0 && c.learning_rate <= 1.0)) {
    throw ConfigError("catboost: learning rate must lie in [0, 1]");
  }
  if (c.permutations < 1) throw ConfigError("catboost: permutations must be at least 1");
  if (c.lambda < 0.0) throw ConfigError("catboost: lambda must be non-negative");
  if (c.bins < 2) throw ConfigError("catboost: bins must be at least 2");
}

namespace {

// Chooses one (feature, bin) per level, maximizing the summed leaf score over
// all current leaves. Growth stops early when no split improves the level.
ObliviousTree grow_oblivious(const BinnedMatrix& data, std::span<const double> grad, int depth, double lambda,
                             std::vector<std::uint32_t>& leaf_of) {
  const std::size_t n = data.rows;
  ObliviousTree tree;
  std::fill(leaf_of.begin(), leaf_of.end(), 0u);
  std::vector<double> hist_g;
  std::vector<double> hist_h;
  std::vector<double> left_g;
  std::vector<double> left_h;
  std::vector<double> tot_g;
  std::vector<double> tot_h;

  for (int level = 0; level < depth; ++level) {
    const std::size_t leaves = std::size_t{1} << level;
    tot_g.assign(leaves, 0.0);
    tot_h.assign(leaves, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      tot_g[leaf_of[i]] += grad[i];
      tot_h[leaf_of[i]] += 1.0;
    }
    double current = 0.0;
    for (std::size_t l = 0; l < leaves; ++l) current += leaf_score(tot_g[l], tot_h[l], lambda);

    int best_feature = -1;
    std::uint32_t best_bin = 0;
    double best_gain = 0.0;
    for (std::size_t f = 0; f < data.bins.features(); ++f) {
      const std::size_t nb = data.bins.bin_count(f);
      if (nb < 2) continue;
      hist_g.assign(nb * leaves, 0.0);
      hist_h.assign(nb * leaves, 0.0);
      const std::uint32_t* codes = data.codes.data() + f * n;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cell = codes[i] * leaves + leaf_of[i];
        hist_g[cell] += grad[i];
        hist_h[cell] += 1.0;
      }
      left_g.assign(leaves, 0.0);
      left_h.assign(leaves, 0.0);
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        bool moved = false;
        for (std::size_t l = 0; l < leaves; ++l) {
          const std::size_t cell = b * leaves + l;
          if (hist_h[cell] == 0.0) continue;
          moved = true;
          left_g[l] += hist_g[cell];
          left_h[l] += hist_h[cell];
        }
        if (!moved) continue;
        double score = 0.0;
        for (std::size_t l = 0; l < leaves; ++l) {
          score += leaf_score(left_g[l], left_h[l], lambda) +
                   leaf_score(tot_g[l] - left_g[l], tot_h[l] - left_h[l], lambda);
        }
        const double gain = score - current;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_bin = static_cast<std::uint32_t>(b);
        }
      }
    }
    if (best_feature < 0) break;
    tree.features.push_back(best_feature);
    tree.bins.push_back(best_bin);
    tree.thresholds.push_back(data.bins.edges(static_cast<std::size_t>(best_feature))[best_bin]);
    const std::uint32_t* codes = data.codes.data() + static_cast<std::size_t>(best_feature) * n;
    for (std::size_t i = 0; i < n; ++i) {
      if (codes[i] > best_bin) leaf_of[i] |= static_cast<std::uint32_t>(leaves);
    }
  }
  tree.leaf_values.assign(std::size_t{1} << tree.depth(), 0.0);
  return tree;
}

ObliviousEnsemble fit_one(const BinnedMatrix& data, std::span<const double> y, const CatBoostConfig& config,
                          double base, const std::vector<std::uint32_t>& permutation) {
  const std::size_t n = data.rows;
  ObliviousEnsemble ensemble;
  ensemble.base = base;
  ensemble.learning_rate = config.learning_rate;

  // Ordered mode keeps supporting models trained on the first 2^k rows of the
  // permutation. Row at position p >= 1 takes its residual from the model of
  // size 2^floor(log2 p), which has not seen it. The residuals drive the tree
  // structure; leaf values come from the full model's own residuals.
  std::vector<std::vector<double>> support;
  if (config.ordered) {
    for (std::size_t size = 1; size < n; size *= 2) support.emplace_back(std::min(2 * size, n), base);
  }
  std::vector<double> full(n, base);
  std::vector<double> grad(n);
  std::vector<double> full_grad(n);
  std::vector<std::uint32_t> leaf_of(n);
  for (int m = 0; m < config.trees; ++m) {
    for (std::size_t i = 0; i < n; ++i) full_grad[i] = full[i] - y[i];
    if (config.ordered) {
      grad[permutation[0]] = base - y[permutation[0]];
      for (std::size_t k = 0, size = 1; k < support.size(); ++k, size *= 2) {
        for (std::size_t pos = size; pos < support[k].size(); ++pos) {
          grad[permutation[pos]] = support[k][pos] - y[permutation[pos]];
        }
      }
    } else {
      grad = full_grad;
    }
    ObliviousTree tree = grow_oblivious(data, grad, config.depth, config.lambda, leaf_of);
    const std::size_t leaves = tree.leaf_values.size();
    std::vector<double> sum_g(leaves);
    std::vector<double> sum_h(leaves);
    const auto accumulate_leaves = [&](auto&& gradient_of, std::size_t count) {
      std::fill(sum_g.begin(), sum_g.end(), 0.0);
      std::fill(sum_h.begin(), sum_h.end(), 0.0);
      for (std::size_t q = 0; q < count; ++q) {
        const auto [row, g] = gradient_of(q);
        sum_g[leaf_of[row]] += g;
        sum_h[leaf_of[row]] += 1.0;
      }
    };

    accumulate_leaves([&](std::size_t i) { return std::pair{i, full_grad[i]}; }, n);
    for (std::size_t l = 0; l < leaves; ++l) tree.leaf_values[l] = leaf_weight(sum_g[l], sum_h[l], config.lambda);
    for (std::size_t i = 0; i < n; ++i) full[i] += config.learning_rate * tree.leaf_values[leaf_of[i]];

    for (std::size_t k = 0, size = 1; k < support.size(); ++k, size *= 2) {
      std::vector<double>& pred = support[k];
      accumulate_leaves(
          [&](std::size_t q) {
            const std::uint32_t row = permutation[q];
            return std::pair<std::size_t, double>{row, pred[q] - y[row]};
          },
          size);
      for (std::size_t q = 0; q < pred.size(); ++q) {
        const std::uint32_t l = leaf_of[permutation[q]];
        pred[q] += config.learning_rate * leaf_weight(sum_g[l], sum_h[l], config.lambda);
      }
    }
    ensemble.trees.push_back(std::move(tree));
  }
  return ensemble;
}

}  // namespace

CatBoostModel fit_catboost(const Matrix& x, std::span<const double> y, const CatBoostConfig& config,
                           std::uint64_t seed) {
  validate(config);
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0 || y.size() != n) throw DataError("catboost: empty or misaligned training data");

  const BinnedMatrix data = BinnedMatrix::build(x, config.bins);
  const double base = mean(y);
  const Rng root(seed);
  CatBoostModel model;
  const int count = config.ordered ? config.permutations : 1;
  for (int p = 0; p < count; ++p) {
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    if (config.ordered) {
      Rng rng = root.derive("permutation-" + std::to_string(p));
      rng.shuffle(perm);
    }
    model.ensembles.push_back(fit_one(data, y, config, base, perm));
  }
  return model;
}

}  // namespace gridcast
