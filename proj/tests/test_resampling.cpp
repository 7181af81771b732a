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

#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "mirage/resampling.hpp"

namespace mirage {
namespace {

struct Fixture {
  FeatureMatrix x;
  Labels y;
};

Fixture imbalanced(std::size_t majority, std::size_t minority, std::size_t dims, std::uint64_t seed) {
  Rng rng(seed);
  Fixture f;
  for (std::size_t i = 0; i < majority + minority; ++i) {
    const int label = i < majority ? 0 : 1;
    std::vector<double> row(dims);
    for (auto& v : row) v = rng.normal() + (label ? 3.0 : 0.0);
    f.x.append_row(row);
    f.y.push_back(label);
  }
  return f;
}

std::size_t count_label(const Labels& y, int label) {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
}

// Brute-force k nearest neighbours of row `i` among rows with the same label.
std::vector<std::size_t> oracle_neighbours(const FeatureMatrix& x, const Labels& y, std::size_t i,
                                           std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t j = 0; j < x.rows(); ++j) {
    if (j == i || y[j] != y[i]) continue;
    double s = 0;
    for (std::size_t c = 0; c < x.cols(); ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
    d.emplace_back(s, j);
  }
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < k; ++t) out.push_back(d[t].second);
  return out;
}

TEST(Smote, RaisesMinorityToHalfOfMajority) {
  const auto f = imbalanced(1000, 200, 4, 1);
  const auto r = smote_oversample(f.x, f.y, ResampleConfig{});
  EXPECT_EQ(count_label(r.labels, 0), 1000u);
  EXPECT_EQ(count_label(r.labels, 1), 500u);
}

TEST(Smote, TargetAlreadyMetIsIdentity) {
  const auto f = imbalanced(400, 200, 3, 2);
  const auto r = smote_oversample(f.x, f.y, ResampleConfig{});
  EXPECT_EQ(r.labels, f.y);
  EXPECT_EQ(r.features.data(), f.x.data());
}

TEST(Smote, SyntheticPointsLieOnSegmentsToTrueNeighbours) {
  const auto f = imbalanced(300, 40, 3, 3);
  ResampleConfig cfg;
  const auto r = smote_oversample(f.x, f.y, cfg);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    if (!r.synthetic[i]) continue;
    const std::size_t base = r.origin[i];
    ASSERT_EQ(f.y[base], 1);
    bool on_segment = false;
    for (std::size_t nn : oracle_neighbours(f.x, f.y, base, cfg.k_neighbors)) {
      // Solve for u on the first axis, then check every axis and 0 <= u <= 1.
      const double span = f.x(nn, 0) - f.x(base, 0);
      if (std::abs(span) < 1e-12) continue;
      const double u = (r.features(i, 0) - f.x(base, 0)) / span;
      if (u < -1e-12 || u > 1 + 1e-12) continue;
      bool ok = true;
      for (std::size_t c = 0; c < f.x.cols(); ++c) {
        ok &= std::abs(f.x(base, c) + u * (f.x(nn, c) - f.x(base, c)) - r.features(i, c)) < 1e-9;
      }
      on_segment |= ok;
    }
    EXPECT_TRUE(on_segment) << "synthetic row " << i;
    ++checked;
  }
  EXPECT_EQ(checked, 110u);
}

TEST(Smote, OriginalsPreservedInPlace) {
  const auto f = imbalanced(500, 60, 2, 4);
  const auto r = smote_oversample(f.x, f.y, ResampleConfig{});
  for (std::size_t i = 0; i < f.y.size(); ++i) {
    EXPECT_EQ(r.labels[i], f.y[i]);
    EXPECT_FALSE(r.synthetic[i]);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(r.features(i, c), f.x(i, c));
  }
}

TEST(Smote, Errors) {
  const auto one_class = imbalanced(10, 0, 2, 5);
  EXPECT_THROW(smote_oversample(one_class.x, one_class.y, ResampleConfig{}), DataError);
  const auto tiny = imbalanced(100, 5, 2, 5);  // needs k + 1 = 6
  EXPECT_THROW(smote_oversample(tiny.x, tiny.y, ResampleConfig{}), DataError);
  ResampleConfig bad;
  bad.smote_ratio = 0.8;
  bad.under_ratio = 0.7;
  EXPECT_THROW(bad.validate(), UsageError);
}

TEST(Smote, DeterministicPerSeed) {
  const auto f = imbalanced(300, 30, 3, 6);
  ResampleConfig cfg;
  cfg.seed = 99;
  const auto a = smote_oversample(f.x, f.y, cfg);
  const auto b = smote_oversample(f.x, f.y, cfg);
  EXPECT_EQ(a.features.data(), b.features.data());
}

TEST(Undersample, ReducesMajorityToCeiling) {
  const auto f = imbalanced(1000, 500, 2, 7);
  const auto r = random_undersample(f.x, f.y, ResampleConfig{});
  EXPECT_EQ(count_label(r.labels, 0), 715u);
  EXPECT_EQ(count_label(r.labels, 1), 500u);
}

TEST(Undersample, MajorityBelowTargetUnchanged) {
  const auto f = imbalanced(600, 500, 2, 8);
  const auto r = random_undersample(f.x, f.y, ResampleConfig{});
  EXPECT_EQ(r.labels, f.y);
}

TEST(Undersample, SameSeedSameSelection) {
  const auto f = imbalanced(1000, 100, 2, 9);
  ResampleConfig cfg;
  const auto a = random_undersample(f.x, f.y, cfg);
  const auto b = random_undersample(f.x, f.y, cfg);
  EXPECT_EQ(a.origin, b.origin);
  cfg.seed = 7;
  EXPECT_NE(random_undersample(f.x, f.y, cfg).origin, a.origin);
}

TEST(Undersample, NoRowSelectedTwice) {
  const auto f = imbalanced(1000, 100, 2, 10);
  const auto r = random_undersample(f.x, f.y, ResampleConfig{});
  std::set<std::size_t> s(r.origin.begin(), r.origin.end());
  EXPECT_EQ(s.size(), r.origin.size());
}

Dataset as_dataset(const Fixture& f) {
  Dataset d;
  for (std::size_t c = 0; c < f.x.cols(); ++c) d.feature_names.push_back("f" + std::to_string(c));
  for (std::size_t i = 0; i < f.y.size(); ++i) {
    const auto row = f.x.row(i);
    d.records.push_back({{row.begin(), row.end()}, f.y[i], f.y[i] ? "DoS" : "BENIGN"});
  }
  return d;
}

TEST(BalancePipeline, DeskFixtureCounts) {
  const auto f = imbalanced(1000, 200, 4, 11);
  BalanceStats st;
  const auto out = balance_pipeline(as_dataset(f), ResampleConfig{}, &st);
  EXPECT_EQ(out.size() - out.attack_count(), 715u);
  EXPECT_EQ(out.attack_count(), 500u);
  EXPECT_EQ(st.smote_minority, 500u);
  EXPECT_EQ(st.smote_majority, 1000u);
  EXPECT_EQ(st.final_majority, 715u);
  // ~58.8% normal after rebalancing an 80% normal input.
  EXPECT_NEAR(715.0 / 1215.0, 0.588, 5e-4);
}

TEST(BalancePipeline, OriginalMinoritySurvivesAndSyntheticStaysInBox) {
  const auto f = imbalanced(2000, 150, 5, 12);
  const auto d = as_dataset(f);
  const auto out = balance_pipeline(d, ResampleConfig{});
  std::vector<double> lo(5, 1e300), hi(5, -1e300);
  std::multiset<std::vector<double>> originals;
  for (const auto& r : d.records) {
    if (r.label != 1) continue;
    originals.insert(r.features);
    for (std::size_t c = 0; c < 5; ++c) {
      lo[c] = std::min(lo[c], r.features[c]);
      hi[c] = std::max(hi[c], r.features[c]);
    }
  }
  std::multiset<std::vector<double>> minority_out;
  for (const auto& r : out.records) {
    if (r.label != 1) continue;
    minority_out.insert(r.features);
    EXPECT_EQ(r.category, "DoS");
    for (std::size_t c = 0; c < 5; ++c) {
      ASSERT_TRUE(std::isfinite(r.features[c]));
      ASSERT_GE(r.features[c], lo[c] - 1e-12);
      ASSERT_LE(r.features[c], hi[c] + 1e-12);
    }
  }
  for (const auto& o : originals) EXPECT_GE(minority_out.count(o), 1u);
  const double ratio = static_cast<double>(out.attack_count()) /
                       static_cast<double>(out.size() - out.attack_count());
  EXPECT_NEAR(ratio, 0.7, 1.0 / static_cast<double>(out.size() - out.attack_count()));
}

TEST(BalancePipeline, RatiosEqualToExistingRatioAreIdentity) {
  const auto f = imbalanced(500, 250, 2, 13);
  ResampleConfig cfg;
  cfg.smote_ratio = 0.5;
  cfg.under_ratio = 0.5;
  const auto out = balance_pipeline(as_dataset(f), cfg);
  ASSERT_EQ(out.size(), f.y.size());
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out.records[i].label, f.y[i]);
}

}  // namespace
}  // namespace mirage
