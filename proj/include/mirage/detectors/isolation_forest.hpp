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

#ifndef MIRAGE_DETECTORS_ISOLATION_FOREST_HPP_
#define MIRAGE_DETECTORS_ISOLATION_FOREST_HPP_

#include <cmath>
#include <vector>

#include "mirage/common.hpp"
#include "mirage/detectors/serialization.hpp"
#include "mirage/detectors/tree.hpp"

namespace mirage {

struct IsolationForestConfig {
  int n_trees = 100;
  int subsample = 256;
  std::uint64_t seed = 42;
};

/// Average path length of an unsuccessful search in a binary search tree of
/// n keys: c(n) = 2 H(n-1) - 2 (n-1) / n, with exact harmonic numbers, so
/// c(1) = 0 and c(2) = 1.
inline double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  double harmonic = 0.0;
  for (std::size_t i = 1; i < n; ++i) harmonic += 1.0 / static_cast<double>(i);
  const double nd = static_cast<double>(n);
  return 2.0 * harmonic - 2.0 * (nd - 1.0) / nd;
}

/// Leaves store depth + c(leaf size), i.e. the path length h(x) directly.
class IsolationForestModel : public Scorer {
 public:
  IsolationForestModel() = default;
  IsolationForestModel(std::vector<Tree> trees, std::size_t dim, std::size_t subsample)
      : trees_(std::move(trees)),
        dim_(dim),
        subsample_(subsample),
        normalizer_(average_path_length(subsample)) {}

  std::string name() const override { return "isolation_forest"; }
  std::size_t dimension() const override { return dim_; }

  double expected_path_length(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict(x);
    return trees_.empty() ? 0.0 : sum / static_cast<double>(trees_.size());
  }

  // s(x) = 2^(-E[h(x)] / c(psi)).
  double score(std::span<const double> x) const override {
    check_dimension(x);
    return score_from_path_length(expected_path_length(x));
  }

  double score_from_path_length(double mean_path) const {
    if (normalizer_ <= 0.0) return 0.5;
    return std::exp2(-mean_path / normalizer_);
  }

  std::size_t subsample() const { return subsample_; }
  const std::vector<Tree>& trees() const { return trees_; }

  void serialize(ByteWriter& w) const {
    w.u64(dim_);
    w.u64(subsample_);
    w.u64(trees_.size());
    for (const auto& t : trees_) w.tree(t);
  }

  static IsolationForestModel deserialize(ByteReader& r) {
    const std::size_t dim = r.u64();
    const std::size_t psi = r.u64();
    const std::size_t n = r.u64();
    std::vector<Tree> trees;
    for (std::size_t i = 0; i < n; ++i) trees.push_back(r.tree());
    return IsolationForestModel(std::move(trees), dim, psi);
  }

 private:
  std::vector<Tree> trees_;
  std::size_t dim_ = 0;
  std::size_t subsample_ = 0;
  double normalizer_ = 0.0;
};

namespace detail {

class IsolationTreeBuilder {
 public:
  IsolationTreeBuilder(const FeatureMatrix& x, int height_limit, Rng& rng)
      : x_(x), height_limit_(height_limit), rng_(rng) {}

  Tree build(std::vector<std::size_t> idx) {
    Tree t;
    grow(t, idx, 0);
    return t;
  }

 private:
  std::int32_t grow(Tree& t, std::vector<std::size_t>& idx, int depth) {
    auto leaf = [&] {
      return t.add_leaf(static_cast<double>(depth) + average_path_length(idx.size()));
    };
    if (depth >= height_limit_ || idx.size() <= 1) return leaf();

    // Random feature; constant features are skipped by trying the rest in a
    // random order.
    const std::size_t p = x_.cols();
    std::vector<std::size_t> features(p);
    std::iota(features.begin(), features.end(), std::size_t{0});
    int feature = -1;
    double lo = 0, hi = 0;
    for (std::size_t k = 0; k < p && feature < 0; ++k) {
      std::swap(features[k], features[k + rng_.index(p - k)]);
      const std::size_t f = features[k];
      lo = hi = x_(idx[0], f);
      for (auto i : idx) {
        lo = std::min(lo, x_(i, f));
        hi = std::max(hi, x_(i, f));
      }
      if (lo < hi) feature = static_cast<int>(f);
    }
    if (feature < 0) return leaf();

    double thr = rng_.uniform(lo, hi);
    if (!(thr > lo)) thr = hi;  // keep both sides non-empty
    std::vector<std::size_t> left, right;
    for (auto i : idx) (x_(i, static_cast<std::size_t>(feature)) < thr ? left : right).push_back(i);

    const std::int32_t me = t.add_node();
    t.nodes()[static_cast<std::size_t>(me)].feature = feature;
    t.nodes()[static_cast<std::size_t>(me)].threshold = thr;
    const std::int32_t l = grow(t, left, depth + 1);
    const std::int32_t r = grow(t, right, depth + 1);
    t.nodes()[static_cast<std::size_t>(me)].left = l;
    t.nodes()[static_cast<std::size_t>(me)].right = r;
    return me;
  }

  const FeatureMatrix& x_;
  int height_limit_;
  Rng& rng_;
};

}  // namespace detail

inline IsolationForestModel train_isolation_forest(const FeatureMatrix& x,
                                                   const IsolationForestConfig& cfg) {
  if (cfg.n_trees < 1 || cfg.subsample < 2) throw UsageError("invalid isolation forest config");
  const auto psi = static_cast<std::size_t>(cfg.subsample);
  if (x.rows() < psi) {
    throw DataError("isolation forest needs at least " + std::to_string(psi) +
                    " samples, got " + std::to_string(x.rows()));
  }
  const int height_limit =
      static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));
  std::vector<Tree> trees(static_cast<std::size_t>(cfg.n_trees));
  for (std::size_t t = 0; t < trees.size(); ++t) {
    Rng rng(mix_seed(cfg.seed, 0x1f000 + t));
    std::vector<std::size_t> pool(x.rows());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < psi; ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
    pool.resize(psi);
    detail::IsolationTreeBuilder builder(x, height_limit, rng);
    trees[t] = builder.build(std::move(pool));
  }
  return IsolationForestModel(std::move(trees), x.cols(), psi);
}

}  // namespace mirage

#endif  // MIRAGE_DETECTORS_ISOLATION_FOREST_HPP_
