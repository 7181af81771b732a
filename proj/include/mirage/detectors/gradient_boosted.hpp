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

// Gradient-boosted trees on the logistic loss, grown depth-wise over
// quantile-binned features with second-order (Newton) leaf weights.

#ifndef MIRAGE_DETECTORS_GRADIENT_BOOSTED_HPP_
#define MIRAGE_DETECTORS_GRADIENT_BOOSTED_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "mirage/common.hpp"
#include "mirage/detectors/serialization.hpp"
#include "mirage/detectors/tree.hpp"

namespace mirage {

struct GradientBoostedConfig {
  int n_trees = 200;
  double learning_rate = 0.1;
  int max_depth = 6;
  double l2_lambda = 1.0;
  double min_child_weight = 1.0;
  int max_bins = 256;
  // Unset: #negative / #positive of the training labels.
  std::optional<double> scale_pos_weight;
  std::uint64_t seed = 42;
};

class GradientBoostedModel : public Scorer {
 public:
  GradientBoostedModel() = default;
  GradientBoostedModel(std::vector<Tree> trees, std::size_t dim, double base_score,
                       double learning_rate, double scale_pos_weight)
      : trees_(std::move(trees)),
        dim_(dim),
        base_score_(base_score),
        learning_rate_(learning_rate),
        scale_pos_weight_(scale_pos_weight) {}

  std::string name() const override { return "gradient_boosted"; }
  std::size_t dimension() const override { return dim_; }

  double margin(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict(x);
    return base_score_ + learning_rate_ * sum;
  }

  double score(std::span<const double> x) const override {
    check_dimension(x);
    return sigmoid(margin(x));
  }

  double base_score() const { return base_score_; }
  double learning_rate() const { return learning_rate_; }
  double scale_pos_weight() const { return scale_pos_weight_; }
  const std::vector<Tree>& trees() const { return trees_; }

  void serialize(ByteWriter& w) const {
    w.u64(dim_);
    w.f64(base_score_);
    w.f64(learning_rate_);
    w.f64(scale_pos_weight_);
    w.u64(trees_.size());
    for (const auto& t : trees_) w.tree(t);
  }

  static GradientBoostedModel deserialize(ByteReader& r) {
    const std::size_t dim = r.u64();
    const double base = r.f64();
    const double lr = r.f64();
    const double spw = r.f64();
    const std::size_t n = r.u64();
    std::vector<Tree> trees;
    for (std::size_t i = 0; i < n; ++i) trees.push_back(r.tree());
    return GradientBoostedModel(std::move(trees), dim, base, lr, spw);
  }

 private:
  std::vector<Tree> trees_;
  std::size_t dim_ = 0;
  double base_score_ = 0.0;
  double learning_rate_ = 0.1;
  double scale_pos_weight_ = 1.0;
};

namespace detail {

// Cut points per feature; bin b holds values in [cuts[b-1], cuts[b]).
inline std::vector<std::vector<double>> quantile_cuts(const FeatureMatrix& x, int max_bins) {
  std::vector<std::vector<double>> cuts(x.cols());
  std::vector<double> col(x.rows());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (std::size_t i = 0; i < x.rows(); ++i) col[i] = x(i, f);
    std::sort(col.begin(), col.end());
    std::vector<double> uniq;
    std::unique_copy(col.begin(), col.end(), std::back_inserter(uniq));
    auto& c = cuts[f];
    auto midpoint = [](double a, double b) {
      const double m = a + 0.5 * (b - a);
      return m > a ? m : b;
    };
    if (uniq.size() <= static_cast<std::size_t>(max_bins)) {
      for (std::size_t k = 0; k + 1 < uniq.size(); ++k) c.push_back(midpoint(uniq[k], uniq[k + 1]));
    } else {
      for (int b = 1; b < max_bins; ++b) {
        const std::size_t pos = (static_cast<std::size_t>(b) * col.size()) /
                                static_cast<std::size_t>(max_bins);
        const auto hi = std::upper_bound(uniq.begin(), uniq.end(), col[pos - 1]);
        if (hi == uniq.end()) continue;
        const double cut = midpoint(*(hi - 1), *hi);
        if (c.empty() || cut > c.back()) c.push_back(cut);
      }
    }
  }
  return cuts;
}

class BoostTreeBuilder {
 public:
  BoostTreeBuilder(const std::vector<std::uint16_t>& bins, std::size_t p,
                   const std::vector<std::vector<double>>& cuts, const GradientBoostedConfig& cfg,
                   const std::vector<double>& grad, const std::vector<double>& hess)
      : bins_(bins), p_(p), cuts_(cuts), cfg_(cfg), grad_(grad), hess_(hess) {}

  Tree build(std::vector<std::size_t> idx) {
    Tree t;
    grow(t, idx, 0);
    return t;
  }

 private:
  double leaf_weight(double g, double h) const { return -g / (h + cfg_.l2_lambda); }
  double structure_score(double g, double h) const { return g * g / (h + cfg_.l2_lambda); }

  std::int32_t grow(Tree& t, std::vector<std::size_t>& idx, int depth) {
    double g = 0, h = 0;
    for (auto i : idx) {
      g += grad_[i];
      h += hess_[i];
    }
    if (depth >= cfg_.max_depth || idx.size() < 2) return t.add_leaf(leaf_weight(g, h));

    // Histogram of gradient/hessian sums per (feature, bin).
    std::size_t total_bins = 0;
    std::vector<std::size_t> offset(p_);
    for (std::size_t f = 0; f < p_; ++f) {
      offset[f] = total_bins;
      total_bins += cuts_[f].size() + 1;
    }
    std::vector<double> hg(total_bins, 0.0), hh(total_bins, 0.0);
    for (auto i : idx) {
      const std::uint16_t* row = &bins_[i * p_];
      for (std::size_t f = 0; f < p_; ++f) {
        hg[offset[f] + row[f]] += grad_[i];
        hh[offset[f] + row[f]] += hess_[i];
      }
    }

    const double parent = structure_score(g, h);
    double best_gain = 0.0;
    int best_feature = -1;
    std::size_t best_bin = 0;
    for (std::size_t f = 0; f < p_; ++f) {
      double gl = 0, hl = 0;
      for (std::size_t b = 0; b < cuts_[f].size(); ++b) {
        gl += hg[offset[f] + b];
        hl += hh[offset[f] + b];
        const double gr = g - gl, hr = h - hl;
        if (hl < cfg_.min_child_weight || hr < cfg_.min_child_weight) continue;
        const double gain =
            0.5 * (structure_score(gl, hl) + structure_score(gr, hr) - parent);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_bin = b;
        }
      }
    }
    if (best_feature < 0) return t.add_leaf(leaf_weight(g, h));

    const auto bf = static_cast<std::size_t>(best_feature);
    std::vector<std::size_t> left, right;
    for (auto i : idx) (bins_[i * p_ + bf] <= best_bin ? left : right).push_back(i);
    idx.clear();
    idx.shrink_to_fit();

    const std::int32_t me = t.add_node();
    t.nodes()[static_cast<std::size_t>(me)].feature = best_feature;
    t.nodes()[static_cast<std::size_t>(me)].threshold = cuts_[bf][best_bin];
    t.nodes()[static_cast<std::size_t>(me)].value = leaf_weight(g, h);
    const std::int32_t l = grow(t, left, depth + 1);
    const std::int32_t r = grow(t, right, depth + 1);
    t.nodes()[static_cast<std::size_t>(me)].left = l;
    t.nodes()[static_cast<std::size_t>(me)].right = r;
    return me;
  }

  const std::vector<std::uint16_t>& bins_;
  std::size_t p_;
  const std::vector<std::vector<double>>& cuts_;
  const GradientBoostedConfig& cfg_;
  const std::vector<double>& grad_;
  const std::vector<double>& hess_;
};

}  // namespace detail

inline GradientBoostedModel train_gradient_boosted(const FeatureMatrix& x, std::span<const int> y,
                                                   const GradientBoostedConfig& cfg) {
  if (x.rows() != y.size()) throw UsageError("feature/label length mismatch");
  const std::size_t pos = count_positive(y);
  const std::size_t n = y.size();
  if (pos == 0 || pos == n) throw DataError("gradient boosting needs both classes present");
  if (cfg.n_trees < 1 || cfg.max_depth < 1 || cfg.max_bins < 2 || cfg.max_bins > 65535) {
    throw UsageError("invalid gradient boosting config");
  }
  const double spw = cfg.scale_pos_weight.value_or(static_cast<double>(n - pos) /
                                                   static_cast<double>(pos));
  if (!(spw > 0.0)) throw UsageError("scale_pos_weight must be positive");

  const std::size_t p = x.cols();
  const auto cuts = detail::quantile_cuts(x, cfg.max_bins);
  std::vector<std::uint16_t> bins(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < p; ++f) {
      const auto& c = cuts[f];
      bins[i * p + f] =
          static_cast<std::uint16_t>(std::upper_bound(c.begin(), c.end(), x(i, f)) - c.begin());
    }
  }

  std::vector<double> weight(n);
  double wsum = 0, wpos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    weight[i] = y[i] == 1 ? spw : 1.0;
    wsum += weight[i];
    if (y[i] == 1) wpos += weight[i];
  }
  const double prior = std::clamp(wpos / wsum, 1e-12, 1.0 - 1e-12);
  const double base = std::log(prior / (1.0 - prior));

  std::vector<double> margin(n, base), grad(n), hess(n);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(cfg.n_trees));
  for (int t = 0; t < cfg.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double prob = sigmoid(margin[i]);
      grad[i] = weight[i] * (prob - y[i]);
      hess[i] = std::max(weight[i] * prob * (1.0 - prob), 1e-16);
    }
    detail::BoostTreeBuilder builder(bins, p, cuts, cfg, grad, hess);
    Tree tree = builder.build(all);
    for (std::size_t i = 0; i < n; ++i) margin[i] += cfg.learning_rate * tree.predict(x.row(i));
    trees.push_back(std::move(tree));
  }
  return GradientBoostedModel(std::move(trees), p, base, cfg.learning_rate, spw);
}

}  // namespace mirage

#endif  // MIRAGE_DETECTORS_GRADIENT_BOOSTED_HPP_
