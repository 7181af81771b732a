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

#ifndef MIRAGE_ENSEMBLE_HPP_
#define MIRAGE_ENSEMBLE_HPP_

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "mirage/common.hpp"
#include "mirage/detectors/tree.hpp"

namespace mirage {

struct DetectorScores {
  double p_rf = 0.0;
  double p_nn = 0.0;
  double p_xgb = 0.0;
  double p_anom = 0.0;

  bool valid() const {
    for (double p : {p_rf, p_nn, p_xgb, p_anom}) {
      if (!(p >= 0.0 && p <= 1.0)) return false;
    }
    return true;
  }
};

struct EnsembleWeights {
  double w_rf = 0.35;
  double w_nn = 0.35;
  double w_xgb = 0.20;
  double w_anom = 0.10;

  void validate() const {
    for (double w : {w_rf, w_nn, w_xgb, w_anom}) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw UsageError("ensemble weights must be >= 0");
    }
    const double sum = w_rf + w_nn + w_xgb + w_anom;
    if (std::abs(sum - 1.0) > 1e-12) {
      throw UsageError("ensemble weights must sum to 1 (got " + std::to_string(sum) + ")");
    }
  }
};

inline double combine(const DetectorScores& s, const EnsembleWeights& w) {
  w.validate();
  if (!s.valid()) throw UsageError("detector scores must lie in [0, 1]");
  const double p = w.w_rf * s.p_rf + w.w_nn * s.p_nn + w.w_xgb * s.p_xgb + w.w_anom * s.p_anom;
  return std::clamp(p, 0.0, 1.0);
}

enum class Decision { kBenign, kAttack };

// Strictly greater: a probability equal to the threshold is benign.
constexpr Decision classify(double p, double theta) {
  return p > theta ? Decision::kAttack : Decision::kBenign;
}

/// Half-open grid [start, stop) in `step` increments. Points are rounded to
/// 1e-12 so 0.25 + 3 * 0.05 is exactly 0.4.
struct ThresholdGrid {
  double start = 0.25;
  double stop = 0.65;
  double step = 0.05;

  std::vector<double> points() const {
    if (!(step > 0.0) || !(stop > start)) throw UsageError("invalid threshold grid");
    std::vector<double> out;
    for (int k = 0;; ++k) {
      const double t = std::round((start + k * step) * 1e12) / 1e12;
      if (t >= stop - 1e-12) break;
      out.push_back(t);
    }
    return out;
  }
};

struct ThresholdResult {
  double theta = 0.0;
  double f1 = 0.0;
  std::vector<std::pair<double, double>> curve;  // (theta, F1) per grid point
};

// F1 = 2tp / (2tp + fp + fn); zero when nothing is predicted or present.
inline double f1_at(std::span<const double> probs, std::span<const int> labels, double theta) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool attack = classify(probs[i], theta) == Decision::kAttack;
    if (attack && labels[i] == 1) ++tp;
    else if (attack) ++fp;
    else if (labels[i] == 1) ++fn;
  }
  const double denom = static_cast<double>(2 * tp + fp + fn);
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

/// Grid search for the F1-maximising threshold. Only a strictly better F1
/// replaces the incumbent, so ties go to the lowest threshold.
inline ThresholdResult tune_threshold(std::span<const double> probs, std::span<const int> labels,
                                      const ThresholdGrid& grid = {}) {
  if (probs.size() != labels.size()) throw UsageError("probability/label length mismatch");
  const std::size_t pos = count_positive(labels);
  if (pos == 0 || pos == labels.size()) {
    throw DataError("threshold tuning needs both classes in the validation labels");
  }
  ThresholdResult best{0.0, -1.0, {}};
  for (double t : grid.points()) {
    const double f1 = f1_at(probs, labels, t);
    best.curve.emplace_back(t, f1);
    if (f1 > best.f1) {
      best.theta = t;
      best.f1 = f1;
    }
  }
  return best;
}

/// The four detectors behind one scoring call.
struct Ensemble {
  std::shared_ptr<const Scorer> rf;
  std::shared_ptr<const Scorer> nn;
  std::shared_ptr<const Scorer> xgb;
  std::shared_ptr<const Scorer> anom;

  std::size_t dimension() const { return rf ? rf->dimension() : 0; }

  DetectorScores score(std::span<const double> x) const {
    return {rf->score(x), nn->score(x), xgb->score(x), anom->score(x)};
  }
};

}  // namespace mirage

#endif  // MIRAGE_ENSEMBLE_HPP_
