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

#ifndef MIRAGE_RESAMPLING_HPP_
#define MIRAGE_RESAMPLING_HPP_

#include <algorithm>
#include <utility>
#include <vector>

#include "mirage/common.hpp"
#include "mirage/flow_ingest.hpp"

namespace mirage {

/// SMOTE followed by random undersampling. Ratios are minority / majority
/// targets after each stage.
struct ResampleConfig {
  double smote_ratio = 0.5;
  double under_ratio = 0.7;
  int k_neighbors = 5;
  std::uint64_t seed = 42;

  void validate() const {
    if (!(smote_ratio > 0.0 && smote_ratio <= 1.0)) {
      throw UsageError("smote_ratio must lie in (0, 1]");
    }
    if (!(under_ratio >= smote_ratio && under_ratio <= 1.0)) {
      throw UsageError("under_ratio must lie in [smote_ratio, 1]");
    }
    if (k_neighbors < 1) throw UsageError("k_neighbors must be >= 1");
  }
};

struct Resampled {
  FeatureMatrix features;
  Labels labels;
  // Row i of the output came from input row origin[i]; synthetic rows carry
  // the index of their base sample and synthetic[i] = true.
  std::vector<std::size_t> origin;
  std::vector<bool> synthetic;
};

namespace detail {

struct ClassSplit {
  int minority_label;
  std::vector<std::size_t> minority;
  std::vector<std::size_t> majority;
};

inline ClassSplit split_classes(std::span<const int> labels) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) throw DataError("resampling needs both classes present");
  // Ties keep the attack class as minority.
  if (pos.size() <= neg.size()) return {1, std::move(pos), std::move(neg)};
  return {0, std::move(neg), std::move(pos)};
}

inline Resampled identity_resample(const FeatureMatrix& x, std::span<const int> y) {
  Resampled r{x, Labels(y.begin(), y.end()), std::vector<std::size_t>(y.size()),
              std::vector<bool>(y.size(), false)};
  std::iota(r.origin.begin(), r.origin.end(), std::size_t{0});
  return r;
}

// k nearest minority neighbours (Euclidean, excluding self) of minority[i];
// ties resolved by lower position in the minority list.
inline std::vector<std::size_t> nearest_minority(const FeatureMatrix& x,
                                                 const std::vector<std::size_t>& minority,
                                                 std::size_t i, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(minority.size() - 1);
  const auto a = x.row(minority[i]);
  for (std::size_t j = 0; j < minority.size(); ++j) {
    if (j == i) continue;
    const auto b = x.row(minority[j]);
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
      const double d = a[c] - b[c];
      s += d * d;
    }
    dist.emplace_back(s, j);
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t t = 0; t < k; ++t) out[t] = dist[t].second;
  return out;
}

}  // namespace detail

/// Raises the minority count to ceil(smote_ratio * majority) with synthetic
/// points x + u * (x_nn - x). Originals keep their positions; synthetic rows
/// are appended.
inline Resampled smote_oversample(const FeatureMatrix& x, std::span<const int> y,
                                  const ResampleConfig& cfg) {
  cfg.validate();
  if (x.rows() != y.size()) throw UsageError("feature/label length mismatch");
  const auto cls = detail::split_classes(y);
  const std::size_t k = static_cast<std::size_t>(cfg.k_neighbors);
  if (cls.minority.size() < k + 1) {
    throw DataError("SMOTE needs at least k_neighbors + 1 = " + std::to_string(k + 1) +
                    " minority samples, found " + std::to_string(cls.minority.size()));
  }
  const std::size_t target =
      ceil_count(cfg.smote_ratio * static_cast<double>(cls.majority.size()));
  Resampled out = detail::identity_resample(x, y);
  if (cls.minority.size() >= target) return out;

  const std::size_t to_make = target - cls.minority.size();
  std::vector<std::vector<std::size_t>> neighbours(cls.minority.size());
  Rng rng(mix_seed(cfg.seed, 0x5307));
  std::vector<double> point(x.cols());
  for (std::size_t s = 0; s < to_make; ++s) {
    const std::size_t i = rng.index(cls.minority.size());
    if (neighbours[i].empty()) neighbours[i] = detail::nearest_minority(x, cls.minority, i, k);
    const std::size_t j = neighbours[i][rng.index(k)];
    const double u = rng.uniform();
    const auto a = x.row(cls.minority[i]);
    const auto b = x.row(cls.minority[j]);
    for (std::size_t c = 0; c < point.size(); ++c) point[c] = a[c] + u * (b[c] - a[c]);
    out.features.append_row(point);
    out.labels.push_back(cls.minority_label);
    out.origin.push_back(cls.minority[i]);
    out.synthetic.push_back(true);
  }
  return out;
}

/// Keeps every minority row and ceil(minority / under_ratio) majority rows
/// drawn without replacement. Row order of the survivors is preserved.
inline Resampled random_undersample(const FeatureMatrix& x, std::span<const int> y,
                                    const ResampleConfig& cfg) {
  cfg.validate();
  if (x.rows() != y.size()) throw UsageError("feature/label length mismatch");
  const auto cls = detail::split_classes(y);
  const std::size_t target =
      ceil_count(static_cast<double>(cls.minority.size()) / cfg.under_ratio);
  if (target >= cls.majority.size()) return detail::identity_resample(x, y);

  std::vector<std::size_t> pool = cls.majority;
  Rng rng(mix_seed(cfg.seed, 0x0de7));
  for (std::size_t i = 0; i < target; ++i) {
    std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
  }
  std::vector<bool> keep(y.size(), false);
  for (auto i : cls.minority) keep[i] = true;
  for (std::size_t i = 0; i < target; ++i) keep[pool[i]] = true;

  Resampled out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!keep[i]) continue;
    out.features.append_row(x.row(i));
    out.labels.push_back(y[i]);
    out.origin.push_back(i);
    out.synthetic.push_back(false);
  }
  return out;
}

struct BalanceStats {
  std::size_t input_majority = 0, input_minority = 0;
  std::size_t smote_majority = 0, smote_minority = 0;
  std::size_t final_majority = 0, final_minority = 0;
};

/// SMOTE then undersampling on a dataset. Synthetic records inherit the
/// category of their base sample.
inline Dataset balance_pipeline(const Dataset& train, const ResampleConfig& cfg,
                                BalanceStats* stats = nullptr) {
  const FeatureMatrix x = train.matrix();
  const Labels y = train.labels();
  const Resampled over = smote_oversample(x, y, cfg);
  const Resampled under = random_undersample(over.features, over.labels, cfg);

  auto counts = [](std::span<const int> labels) {
    const auto cls = detail::split_classes(labels);
    return std::pair{cls.majority.size(), cls.minority.size()};
  };
  if (stats) {
    std::tie(stats->input_majority, stats->input_minority) = counts(y);
    std::tie(stats->smote_majority, stats->smote_minority) = counts(over.labels);
    std::tie(stats->final_majority, stats->final_minority) = counts(under.labels);
  }

  Dataset out;
  out.feature_names = train.feature_names;
  out.provenance = train.provenance;
  out.records.reserve(under.labels.size());
  for (std::size_t i = 0; i < under.labels.size(); ++i) {
    const std::size_t base = over.origin[under.origin[i]];
    FlowRecord rec;
    const auto row = under.features.row(i);
    rec.features.assign(row.begin(), row.end());
    rec.label = under.labels[i];
    rec.category = train.records[base].category;
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace mirage

#endif  // MIRAGE_RESAMPLING_HPP_
