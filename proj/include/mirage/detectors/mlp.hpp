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

#ifndef MIRAGE_DETECTORS_MLP_HPP_
#define MIRAGE_DETECTORS_MLP_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "mirage/common.hpp"
#include "mirage/detectors/serialization.hpp"
#include "mirage/detectors/tree.hpp"

namespace mirage {

struct MlpConfig {
  std::vector<int> hidden = {256, 128, 64};
  double learning_rate = 1e-3;
  int batch_size = 256;
  int max_epochs = 200;
  int patience = 10;
  // Validation loss must drop by more than this to count as an improvement.
  double min_delta = 1e-4;
  std::uint64_t seed = 42;
};

struct MlpTrainingLog {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_validation_loss = 0.0;
  std::vector<double> validation_loss;
};

/// Fully connected network: ReLU hidden layers, one sigmoid output unit,
/// trained on binary cross-entropy.
class MlpModel : public Scorer {
 public:
  using Matrix = Eigen::MatrixXd;
  using Vector = Eigen::VectorXd;

  MlpModel() = default;

  // He-initialised weights, zero biases.
  MlpModel(std::size_t input_dim, const std::vector<int>& hidden, std::uint64_t seed) {
    std::vector<std::size_t> widths{input_dim};
    for (int h : hidden) widths.push_back(static_cast<std::size_t>(h));
    widths.push_back(1);
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const auto in = static_cast<Eigen::Index>(widths[l]);
      const auto out = static_cast<Eigen::Index>(widths[l + 1]);
      const bool output = l + 2 == widths.size();
      const double scale = std::sqrt((output ? 1.0 : 2.0) / static_cast<double>(in));
      Matrix w(out, in);
      for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) w(r, c) = scale * rng.normal();
      }
      weights_.push_back(std::move(w));
      biases_.push_back(Vector::Zero(out));
    }
  }

  std::string name() const override { return "mlp"; }
  std::size_t dimension() const override {
    return weights_.empty() ? 0 : static_cast<std::size_t>(weights_.front().cols());
  }
  std::size_t num_layers() const { return weights_.size(); }
  std::vector<std::size_t> layer_widths() const {
    std::vector<std::size_t> w{dimension()};
    for (const auto& m : weights_) w.push_back(static_cast<std::size_t>(m.rows()));
    return w;
  }

  double logit(std::span<const double> x) const {
    Vector a = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Vector z = weights_[l] * a + biases_[l];
      if (l + 1 < weights_.size()) z = z.cwiseMax(0.0);
      a = std::move(z);
    }
    return a(0);
  }

  double score(std::span<const double> x) const override {
    check_dimension(x);
    return sigmoid(logit(x));
  }

  // Mean binary cross-entropy over the rows of x; stable log-sum-exp form.
  double loss(const FeatureMatrix& x, std::span<const int> y) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) sum += bce_with_logit(logit(x.row(i)), y[i]);
    return x.rows() == 0 ? 0.0 : sum / static_cast<double>(x.rows());
  }

  /// Mean loss over the selected rows and its gradient, flattened in
  /// parameter() order.
  double loss_and_gradient(const FeatureMatrix& x, std::span<const int> y,
                           std::span<const std::size_t> rows, std::vector<double>& grad) const {
    const auto batch = static_cast<Eigen::Index>(rows.size());
    const auto in = static_cast<Eigen::Index>(dimension());
    // Activations are stored one sample per column.
    std::vector<Matrix> acts;
    acts.reserve(weights_.size() + 1);
    Matrix a0(in, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const auto r = x.row(rows[static_cast<std::size_t>(b)]);
      a0.col(b) = Eigen::Map<const Vector>(r.data(), in);
    }
    acts.push_back(std::move(a0));
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix z = (weights_[l] * acts.back()).colwise() + biases_[l];
      if (l + 1 < weights_.size()) z = z.cwiseMax(0.0);
      acts.push_back(std::move(z));
    }

    double loss = 0.0;
    Matrix delta(1, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const double z = acts.back()(0, b);
      const int label = y[rows[static_cast<std::size_t>(b)]];
      loss += bce_with_logit(z, label);
      delta(0, b) = (sigmoid(z) - label) / static_cast<double>(batch);
    }
    loss /= static_cast<double>(batch);

    grad.assign(parameter_count(), 0.0);
    std::vector<std::size_t> offsets = layer_offsets();
    for (std::size_t l = weights_.size(); l-- > 0;) {
      const Matrix gw = delta * acts[l].transpose();
      const Vector gb = delta.rowwise().sum();
      std::size_t o = offsets[l];
      Eigen::Map<Matrix>(grad.data() + o, gw.rows(), gw.cols()) = gw;
      o += static_cast<std::size_t>(gw.size());
      Eigen::Map<Vector>(grad.data() + o, gb.size()) = gb;
      if (l > 0) {
        Matrix back = weights_[l].transpose() * delta;
        // ReLU derivative, taken from the stored post-activation.
        delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
      }
    }
    return loss;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    }
    return n;
  }

  // Flattened parameter view: per layer, weights (column-major) then biases.
  double& parameter(std::size_t i) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const auto nw = static_cast<std::size_t>(weights_[l].size());
      if (i < nw) return weights_[l].data()[i];
      i -= nw;
      const auto nb = static_cast<std::size_t>(biases_[l].size());
      if (i < nb) return biases_[l].data()[i];
      i -= nb;
    }
    throw UsageError("parameter index out of range");
  }

  void apply_update(std::span<const double> step) {
    std::size_t o = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      auto nw = weights_[l].size();
      Eigen::Map<Vector>(weights_[l].data(), nw) -= Eigen::Map<const Vector>(step.data() + o, nw);
      o += static_cast<std::size_t>(nw);
      auto nb = biases_[l].size();
      biases_[l] -= Eigen::Map<const Vector>(step.data() + o, nb);
      o += static_cast<std::size_t>(nb);
    }
  }

  void serialize(ByteWriter& w) const {
    w.u64(weights_.size());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      w.u64(static_cast<std::uint64_t>(weights_[l].rows()));
      w.u64(static_cast<std::uint64_t>(weights_[l].cols()));
      w.f64_array({weights_[l].data(), static_cast<std::size_t>(weights_[l].size())});
      w.f64_array({biases_[l].data(), static_cast<std::size_t>(biases_[l].size())});
    }
  }

  static MlpModel deserialize(ByteReader& r) {
    MlpModel m;
    const std::size_t layers = r.u64();
    for (std::size_t l = 0; l < layers; ++l) {
      const auto rows = static_cast<Eigen::Index>(r.u64());
      const auto cols = static_cast<Eigen::Index>(r.u64());
      const auto w = r.f64_array();
      const auto b = r.f64_array();
      if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
          static_cast<Eigen::Index>(b.size()) != rows) {
        throw DataError("model file: inconsistent MLP layer shape");
      }
      m.weights_.push_back(Eigen::Map<const Matrix>(w.data(), rows, cols));
      m.biases_.push_back(Eigen::Map<const Vector>(b.data(), rows));
    }
    return m;
  }

  static double bce_with_logit(double z, int y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }

 private:
  std::vector<std::size_t> layer_offsets() const {
    std::vector<std::size_t> off;
    std::size_t o = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      off.push_back(o);
      o += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    }
    return off;
  }

  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

/// Minibatch Adam on binary cross-entropy with early stopping on validation
/// loss; returns the best-validation snapshot.
inline MlpModel train_mlp(const FeatureMatrix& x, std::span<const int> y, const FeatureMatrix& vx,
                          std::span<const int> vy, const MlpConfig& cfg,
                          MlpTrainingLog* log = nullptr) {
  if (x.rows() == 0 || vx.rows() == 0) throw DataError("MLP needs non-empty train and validation");
  if (x.rows() != y.size() || vx.rows() != vy.size()) {
    throw UsageError("feature/label length mismatch");
  }
  if (vx.cols() != x.cols()) throw UsageError("validation width differs from training width");
  if (cfg.batch_size < 1 || cfg.max_epochs < 1 || cfg.patience < 1) {
    throw UsageError("invalid MLP config");
  }

  MlpModel model(x.cols(), cfg.hidden, mix_seed(cfg.seed, 1));
  MlpModel best = model;
  const std::size_t np = model.parameter_count();
  std::vector<double> m(np, 0.0), v(np, 0.0), grad, step(np);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  double beta1_t = 1.0, beta2_t = 1.0;

  Rng rng(mix_seed(cfg.seed, 2));
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});

  MlpTrainingLog local;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      const double batch_loss = model.loss_and_gradient(
          x, y, std::span<const std::size_t>(order.data() + start, end - start), grad);
      if (!std::isfinite(batch_loss)) {
        throw DataError("MLP training produced a non-finite loss at epoch " +
                        std::to_string(epoch));
      }
      beta1_t *= kBeta1;
      beta2_t *= kBeta2;
      for (std::size_t k = 0; k < np; ++k) {
        m[k] = kBeta1 * m[k] + (1 - kBeta1) * grad[k];
        v[k] = kBeta2 * v[k] + (1 - kBeta2) * grad[k] * grad[k];
        const double mhat = m[k] / (1 - beta1_t);
        const double vhat = v[k] / (1 - beta2_t);
        step[k] = cfg.learning_rate * mhat / (std::sqrt(vhat) + kEps);
      }
      model.apply_update(step);
    }
    const double val = model.loss(vx, vy);
    if (!std::isfinite(val)) {
      throw DataError("MLP validation loss is non-finite at epoch " + std::to_string(epoch));
    }
    local.validation_loss.push_back(val);
    local.epochs_run = epoch;
    if (val < best_loss - cfg.min_delta) {
      best_loss = val;
      best = model;
      local.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  local.best_validation_loss = best_loss;
  if (log) *log = std::move(local);
  return best;
}

}  // namespace mirage

#endif  // MIRAGE_DETECTORS_MLP_HPP_
