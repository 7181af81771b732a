/*
 * Copyright 2026 The Mirage Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MIRAGE_DETECTORS_RANDOM_FOREST_HPP_
#define MIRAGE_DETECTORS_RANDOM_FOREST_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <thread>
#include <vector>

#include "mirage/common.hpp"
#include "mirage/detectors/serialization.hpp"
#include "mirage/detectors/tree.hpp"

namespace mirage {

struct RandomForestConfig {
  int n_trees = 150;
  int max_depth = 25;
  int min_samples_split = 2;
  // 0 selects floor(sqrt(num_features)).
  int max_features = 0;
  std::uint64_t seed = 42;
  // Trees are seeded independently, so the result does not depend on this.
  unsigned threads = 0;
};

namespace detail {

inline double gini(double pos, double n) {
  if (n <= 0) return 0.0;
  const double p = pos / n;
  return 2.0 * p * (1.0 - p);
}

/// CART with Gini impurity on one bootstrap sample.
class CartBuilder {
 public:
  CartBuilder(const FeatureMatrix& x, std::span<const int> y, const RandomForestConfig& cfg,
              std::size_t mtry, Rng& rng, std::vector<std::size_t>& split_counts)
      : x_(x), y_(y), cfg_(cfg), mtry_(mtry), rng_(rng), split_counts_(split_counts) {}

  Tree build(std::vector<std::size_t> sample) {
    Tree t;
    grow(t, sample, 0);
    return t;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  std::int32_t grow(Tree& t, std::vector<std::size_t>& idx, int depth) {
    const double n = static_cast<double>(idx.size());
    double pos = 0;
    for (auto i : idx) pos += y_[i];
    const double leaf_value = pos / n;
    if (depth >= cfg_.max_depth || idx.size() < static_cast<std::size_t>(cfg_.min_samples_split) ||
        pos == 0 || pos == n) {
      return t.add_leaf(leaf_value);
    }
    const Split s = best_split(idx, pos);
    if (s.feature < 0) return t.add_leaf(leaf_value);

    std::vector<std::size_t> left, right;
    for (auto i : idx) (x_(i, static_cast<std::size_t>(s.feature)) < s.threshold ? left : right).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    ++split_counts_[static_cast<std::size_t>(s.feature)];

    const std::int32_t me = t.add_node();
    t.nodes()[static_cast<std::size_t>(me)].feature = s.feature;
    t.nodes()[static_cast<std::size_t>(me)].threshold = s.threshold;
    t.nodes()[static_cast<std::size_t>(me)].value = leaf_value;
    const std::int32_t l = grow(t, left, depth + 1);
    const std::int32_t r = grow(t, right, depth + 1);
    t.nodes()[static_cast<std::size_t>(me)].left = l;
    t.nodes()[static_cast<std::size_t>(me)].right = r;
    return me;
  }

  Split best_split(const std::vector<std::size_t>& idx, double pos) {
    const std::size_t p = x_.cols();
    std::vector<std::size_t> features(p);
    std::iota(features.begin(), features.end(), std::size_t{0});
    for (std::size_t i = 0; i < mtry_; ++i) std::swap(features[i], features[i + rng_.index(p - i)]);
    features.resize(mtry_);
    // Ascending order so equal gains resolve to the lowest feature index.
    std::sort(features.begin(), features.end());

    const double n = static_cast<double>(idx.size());
    const double parent = gini(pos, n);
    Split best;
    std::vector<std::pair<double, int>> col(idx.size());
    for (std::size_t f : features) {
      for (std::size_t k = 0; k < idx.size(); ++k) col[k] = {x_(idx[k], f), y_[idx[k]]};
      std::sort(col.begin(), col.end());
      double left_pos = 0;
      for (std::size_t k = 0; k + 1 < col.size(); ++k) {
        left_pos += col[k].second;
        if (!(col[k].first < col[k + 1].first)) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = n - nl;
        const double child = (nl * gini(left_pos, nl) + nr * gini(pos - left_pos, nr)) / n;
        const double gain = parent - child;
        if (gain > best.gain) {
          double thr = col[k].first + 0.5 * (col[k + 1].first - col[k].first);
          if (!(thr > col[k].first)) thr = col[k + 1].first;
          best = {static_cast<int>(f), thr, gain};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const int> y_;
  const RandomForestConfig& cfg_;
  std::size_t mtry_;
  Rng& rng_;
  std::vector<std::size_t>& split_counts_;
};

// Runs fn(i) for i in [0, n) on up to `threads` workers; each index is
// handled exactly once and results land in caller-owned slots.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += threads) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

class RandomForestModel : public Scorer {
 public:
  RandomForestModel() = default;
  RandomForestModel(std::vector<Tree> trees, std::size_t dim,
                    std::vector<std::size_t> split_counts = {})
      : trees_(std::move(trees)), dim_(dim), split_counts_(std::move(split_counts)) {}

  std::string name() const override { return "random_forest"; }
  std::size_t dimension() const override { return dim_; }

  // Mean of per-tree leaf probabilities. Leaf values are summed in sorted
  // order so the result is exactly independent of tree order.
  double score(std::span<const double> x) const override {
    check_dimension(x);
    std::vector<double> leaves;
    leaves.reserve(trees_.size());
    for (const auto& t : trees_) leaves.push_back(t.predict(x));
    std::sort(leaves.begin(), leaves.end());
    double sum = 0.0;
    for (double v : leaves) sum += v;
    return trees_.empty() ? 0.0 : sum / static_cast<double>(trees_.size());
  }

  const std::vector<Tree>& trees() const { return trees_; }
  // Number of internal nodes splitting on each feature, over all trees.
  const std::vector<std::size_t>& split_counts() const { return split_counts_; }

  void serialize(ByteWriter& w) const {
    w.u64(dim_);
    w.u64(trees_.size());
    for (const auto& t : trees_) w.tree(t);
  }

  static RandomForestModel deserialize(ByteReader& r) {
    const std::size_t dim = r.u64();
    const std::size_t n = r.u64();
    std::vector<Tree> trees;
    for (std::size_t i = 0; i < n; ++i) trees.push_back(r.tree());
    return RandomForestModel(std::move(trees), dim);
  }

 private:
  std::vector<Tree> trees_;
  std::size_t dim_ = 0;
  std::vector<std::size_t> split_counts_;
};

inline RandomForestModel train_random_forest(const FeatureMatrix& x, std::span<const int> y,
                                             const RandomForestConfig& cfg) {
  if (x.rows() != y.size()) throw UsageError("feature/label length mismatch");
  const std::size_t pos = count_positive(y);
  if (pos == 0 || pos == y.size()) throw DataError("random forest needs both classes present");
  if (cfg.n_trees < 1 || cfg.max_depth < 1) throw UsageError("invalid random forest config");

  const std::size_t p = x.cols();
  std::size_t mtry = cfg.max_features > 0
                         ? static_cast<std::size_t>(cfg.max_features)
                         : static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p))));
  mtry = std::clamp<std::size_t>(mtry, 1, p);

  const auto n_trees = static_cast<std::size_t>(cfg.n_trees);
  std::vector<Tree> trees(n_trees);
  std::vector<std::vector<std::size_t>> counts(n_trees, std::vector<std::size_t>(p, 0));
  detail::parallel_for(n_trees, cfg.threads, [&](std::size_t t) {
    Rng rng(mix_seed(cfg.seed, t));
    std::vector<std::size_t> sample(x.rows());
    for (auto& s : sample) s = rng.index(x.rows());
    detail::CartBuilder builder(x, y, cfg, mtry, rng, counts[t]);
    trees[t] = builder.build(std::move(sample));
  });

  std::vector<std::size_t> total(p, 0);
  for (const auto& c : counts) {
    for (std::size_t j = 0; j < p; ++j) total[j] += c[j];
  }
  return RandomForestModel(std::move(trees), p, std::move(total));
}

}  // namespace mirage

#endif  // MIRAGE_DETECTORS_RANDOM_FOREST_HPP_
