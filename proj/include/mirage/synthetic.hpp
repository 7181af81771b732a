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

// Two-Gaussian flow generator used by fixtures and the gen-synthetic command.
// Benign rows are N(0, I); attack rows add `shift` to the first
// `shifted_dims` coordinates. Column j is then scaled by 10^(j mod 4) so the
// raw columns span several orders of magnitude, like real flow counters.

#ifndef MIRAGE_SYNTHETIC_HPP_
#define MIRAGE_SYNTHETIC_HPP_

#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mirage/common.hpp"
#include "mirage/default_schema.hpp"
#include "mirage/flow_ingest.hpp"

namespace mirage {

struct SyntheticConfig {
  std::size_t n = 5000;
  double attack_ratio = 0.2;
  double shift = 1.0;
  std::size_t shifted_dims = 40;
  std::uint64_t seed = 42;
  std::vector<std::string> categories{"DoS", "PortScan", "BruteForce", "WebAttack"};
};

inline double synthetic_column_scale(std::size_t j) { return std::pow(10.0, static_cast<double>(j % 4)); }

inline std::vector<double> synthetic_row(Rng& rng, bool attack, double shift, std::size_t shifted_dims,
                                         std::size_t dims = kFeatureCount) {
  std::vector<double> x(dims);
  for (std::size_t j = 0; j < dims; ++j) {
    double z = rng.normal();
    if (attack && j < shifted_dims) z += shift;
    x[j] = z * synthetic_column_scale(j);
  }
  return x;
}

inline Dataset make_two_gaussian(const SyntheticConfig& cfg) {
  if (!(cfg.attack_ratio >= 0.0 && cfg.attack_ratio <= 1.0)) throw UsageError("attack ratio must lie in [0, 1]");
  if (cfg.categories.empty()) throw UsageError("need at least one attack category");
  if (cfg.shifted_dims > kFeatureCount) throw UsageError("shifted_dims exceeds the feature count");
  Rng rng(cfg.seed);
  const auto n_attack = static_cast<std::size_t>(std::llround(static_cast<double>(cfg.n) * cfg.attack_ratio));
  std::vector<int> labels(cfg.n, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_attack), 1);
  rng.shuffle(labels);

  Dataset d;
  d.feature_names = default_schema();
  d.provenance.source = "synthetic:seed=" + std::to_string(cfg.seed);
  d.records.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    FlowRecord r;
    r.label = labels[i];
    r.category = r.label ? cfg.categories[rng.index(cfg.categories.size())] : "BENIGN";
    r.features = synthetic_row(rng, r.label == 1, cfg.shift, cfg.shifted_dims);
    d.records.push_back(std::move(r));
  }
  d.provenance.rows_read = cfg.n;
  return d;
}

/// CSV in the flow layout: feature columns then "Label".
inline std::string dataset_to_csv(const Dataset& d) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& name : d.feature_names) os << name << ',';
  os << "Label\n";
  for (const auto& r : d.records) {
    for (double v : r.features) os << v << ',';
    os << (r.label ? r.category : std::string("BENIGN")) << '\n';
  }
  return os.str();
}

}  // namespace mirage

#endif  // MIRAGE_SYNTHETIC_HPP_
