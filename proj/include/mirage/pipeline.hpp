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

// Training workflow: split, standardize, rebalance, fit the four detectors,
// and tune the decision threshold on a held-out slice.

#ifndef MIRAGE_PIPELINE_HPP_
#define MIRAGE_PIPELINE_HPP_

#include <memory>
#include <vector>

#include "json.hpp"
#include "mirage/detectors/gradient_boosted.hpp"
#include "mirage/detectors/isolation_forest.hpp"
#include "mirage/detectors/mlp.hpp"
#include "mirage/detectors/model_container.hpp"
#include "mirage/detectors/random_forest.hpp"
#include "mirage/ensemble.hpp"
#include "mirage/flow_ingest.hpp"
#include "mirage/resampling.hpp"

namespace mirage {

struct TrainConfig {
  double train_fraction = 0.7;
  double mlp_validation_fraction = 0.1;
  ResampleConfig resample;
  RandomForestConfig rf;
  GradientBoostedConfig gbt;
  MlpConfig mlp;
  IsolationForestConfig iforest;
  EnsembleWeights weights;
  std::uint64_t seed = 42;
};

// Child seed streams derived from the master seed.
enum SeedStream : std::uint64_t {
  kSplitStream = 1,
  kResampleStream,
  kForestStream,
  kMlpStream,
  kBoostStream,
  kIsolationStream,
  kMlpValidationStream,
  kTuneStream,
  kSampleStream,
  kBootstrapStream,
  kReplayStream,
};

struct TrainReport {
  std::size_t train_size = 0, test_size = 0;
  BalanceStats balance;
  MlpTrainingLog mlp_log;
  double rf_accuracy = 0.0, mlp_accuracy = 0.0, gbt_accuracy = 0.0;
};

struct TrainOutput {
  ModelBundle bundle;
  Dataset test;  // raw features, as read
  TrainReport report;
};

inline double accuracy_at_half(const Scorer& m, const FeatureMatrix& x, std::span<const int> y) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    ok += (m.score(x.row(i)) > 0.5 ? 1 : 0) == y[i];
  }
  return x.rows() == 0 ? 0.0 : static_cast<double>(ok) / static_cast<double>(x.rows());
}

inline std::pair<Dataset, Dataset> train_test_split(const Dataset& d, const TrainConfig& cfg) {
  return split_dataset(d, cfg.train_fraction, mix_seed(cfg.seed, kSplitStream));
}

inline TrainOutput train_bundle(const Dataset& cleaned, const TrainConfig& cfg) {
  cfg.weights.validate();
  if (cleaned.size() < 10) throw DataError("training needs at least 10 flows");
  auto [train, test] = train_test_split(cleaned, cfg);
  const std::size_t pos = train.attack_count();
  if (pos == 0 || pos == train.size()) throw DataError("training split holds a single class");

  TrainOutput out;
  out.report.train_size = train.size();
  out.report.test_size = test.size();

  const Standardizer standardizer = fit_standardizer(train);
  const Dataset train_std = apply_standardizer(standardizer, train);

  ResampleConfig rcfg = cfg.resample;
  rcfg.seed = mix_seed(cfg.seed, kResampleStream);
  const Dataset balanced = balance_pipeline(train_std, rcfg, &out.report.balance);
  const FeatureMatrix bx = balanced.matrix();
  const Labels by = balanced.labels();

  RandomForestConfig rf_cfg = cfg.rf;
  rf_cfg.seed = mix_seed(cfg.seed, kForestStream);
  auto rf = std::make_shared<RandomForestModel>(train_random_forest(bx, by, rf_cfg));

  GradientBoostedConfig gbt_cfg = cfg.gbt;
  gbt_cfg.seed = mix_seed(cfg.seed, kBoostStream);
  auto gbt = std::make_shared<GradientBoostedModel>(train_gradient_boosted(bx, by, gbt_cfg));

  // Early stopping watches a seeded holdout of the rebalanced training set.
  const auto [fit_idx, val_idx] = split_indices(balanced.size(), 1.0 - cfg.mlp_validation_fraction,
                                                mix_seed(cfg.seed, kMlpValidationStream));
  const FeatureMatrix fx = bx.select_rows(fit_idx), vx = bx.select_rows(val_idx);
  Labels fy, vy;
  for (auto i : fit_idx) fy.push_back(by[i]);
  for (auto i : val_idx) vy.push_back(by[i]);
  MlpConfig mlp_cfg = cfg.mlp;
  mlp_cfg.seed = mix_seed(cfg.seed, kMlpStream);
  auto mlp = std::make_shared<MlpModel>(train_mlp(fx, fy, vx, vy, mlp_cfg, &out.report.mlp_log));

  IsolationForestConfig if_cfg = cfg.iforest;
  if_cfg.seed = mix_seed(cfg.seed, kIsolationStream);
  auto iforest = std::make_shared<IsolationForestModel>(
      train_isolation_forest(train_std.matrix(), if_cfg));

  out.report.rf_accuracy = accuracy_at_half(*rf, bx, by);
  out.report.gbt_accuracy = accuracy_at_half(*gbt, bx, by);
  out.report.mlp_accuracy = accuracy_at_half(*mlp, bx, by);

  ModelBundle& b = out.bundle;
  b.standardizer = standardizer;
  b.rf = std::move(rf);
  b.gbt = std::move(gbt);
  b.mlp = std::move(mlp);
  b.iforest = std::move(iforest);
  b.weights = cfg.weights;
  b.seed = cfg.seed;
  const auto& bal = out.report.balance;
  b.metadata = {
      {"dataset", cleaned.provenance.source},
      {"feature_names", cleaned.feature_names},
      {"train_fraction", cfg.train_fraction},
      {"train_size", out.report.train_size},
      {"test_size", out.report.test_size},
      {"resample",
       {{"smote_ratio", cfg.resample.smote_ratio},
        {"under_ratio", cfg.resample.under_ratio},
        {"k_neighbors", cfg.resample.k_neighbors},
        {"final_majority", bal.final_majority},
        {"final_minority", bal.final_minority}}},
      {"rf", {{"n_trees", cfg.rf.n_trees}, {"max_depth", cfg.rf.max_depth}}},
      {"gbt",
       {{"n_trees", cfg.gbt.n_trees}, {"learning_rate", cfg.gbt.learning_rate},
        {"max_depth", cfg.gbt.max_depth}}},
      {"mlp",
       {{"hidden", cfg.mlp.hidden}, {"epochs_run", out.report.mlp_log.epochs_run},
        {"best_epoch", out.report.mlp_log.best_epoch}}},
      {"iforest", {{"n_trees", cfg.iforest.n_trees}, {"subsample", cfg.iforest.subsample}}},
      {"training_accuracy",
       {{"rf", out.report.rf_accuracy},
        {"mlp", out.report.mlp_accuracy},
        {"gbt", out.report.gbt_accuracy}}},
  };
  out.test = std::move(test);
  return out;
}

/// Ensemble probabilities for raw (unstandardized) flows.
inline std::vector<double> ensemble_probabilities(const ModelBundle& b, const Dataset& raw) {
  const Ensemble e = b.ensemble();
  std::vector<double> out;
  out.reserve(raw.size());
  std::vector<double> x(b.standardizer.dimension());
  for (const auto& r : raw.records) {
    b.standardizer.transform(r.features, x);
    out.push_back(combine(e.score(x), b.weights));
  }
  return out;
}

/// Tunes theta on a seeded slice of the test pool and stores it in the bundle.
inline ThresholdResult tune_bundle(ModelBundle& b, const Dataset& test_pool,
                                   double validation_fraction = 0.1,
                                   const ThresholdGrid& grid = {}) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw UsageError("validation fraction must lie in (0, 1)");
  }
  const auto [val_idx, _] =
      split_indices(test_pool.size(), validation_fraction, mix_seed(b.seed, kTuneStream));
  if (val_idx.empty()) throw DataError("validation slice is empty");
  const Dataset val = test_pool.subset(val_idx);
  const auto probs = ensemble_probabilities(b, val);
  const Labels y = val.labels();
  ThresholdResult r = tune_threshold(probs, y, grid);
  b.theta = r.theta;
  b.metadata["tuning"] = {{"validation_size", val.size()}, {"f1", r.f1}, {"theta", r.theta}};
  return r;
}

}  // namespace mirage

#endif  // MIRAGE_PIPELINE_HPP_
