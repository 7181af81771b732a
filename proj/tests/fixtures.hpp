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

#ifndef MIRAGE_TESTS_FIXTURES_HPP_
#define MIRAGE_TESTS_FIXTURES_HPP_

#include <unistd.h>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "mirage/mirage.hpp"

namespace mirage::testing {

/// Scorer returning a fixed value, or a value read from feature `index`
/// (clamped into [0, 1]) when index >= 0.
class StubScorer : public Scorer {
 public:
  StubScorer(std::size_t dim, double value, int index = -1) : dim_(dim), value_(value), index_(index) {}
  std::string name() const override { return "stub"; }
  std::size_t dimension() const override { return dim_; }
  double score(std::span<const double> x) const override {
    check_dimension(x);
    if (index_ >= 0) return std::clamp(x[static_cast<std::size_t>(index_)], 0.0, 1.0);
    return value_;
  }

 private:
  std::size_t dim_;
  double value_;
  int index_;
};

inline Ensemble stub_ensemble(std::size_t dim, double rf, double nn, double xgb, double anom) {
  return {std::make_shared<StubScorer>(dim, rf), std::make_shared<StubScorer>(dim, nn),
          std::make_shared<StubScorer>(dim, xgb), std::make_shared<StubScorer>(dim, anom)};
}

// All four detectors echo feature 0: an event's score is whatever feature 0 says.
inline Ensemble echo_ensemble(std::size_t dim) {
  return {std::make_shared<StubScorer>(dim, 0, 0), std::make_shared<StubScorer>(dim, 0, 0),
          std::make_shared<StubScorer>(dim, 0, 0), std::make_shared<StubScorer>(dim, 0, 0)};
}

/// Two isotropic Gaussian blobs, label 1 shifted by `shift` on every axis.
inline std::pair<FeatureMatrix, Labels> gaussian_blobs(std::size_t n, std::size_t dims, double shift,
                                                       std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix x(n, dims);
  Labels y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2 == 0 ? 1 : 0;
    for (std::size_t j = 0; j < dims; ++j) x(i, j) = rng.normal() + (y[i] ? shift : 0.0);
  }
  return {x, y};
}

inline double accuracy(const Scorer& m, const FeatureMatrix& x, std::span<const int> y) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) ok += (m.score(x.row(i)) > 0.5 ? 1 : 0) == y[i];
  return static_cast<double>(ok) / static_cast<double>(x.rows());
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("mirage-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

}  // namespace mirage::testing

#endif  // MIRAGE_TESTS_FIXTURES_HPP_
