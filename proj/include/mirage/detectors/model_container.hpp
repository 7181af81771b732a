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

// Versioned ensemble container.
//
//   "MIRAGEMC"                      8-byte magic
//   u32 format version
//   str manifest                    JSON: seeds, hyperparameters, standardizer
//                                   moments, weights, tuned threshold
//   u32 section count
//   { str name, u64 size, bytes }   one per model: rf, mlp, gbt, iforest
//
// Integers and doubles are little-endian; strings are u32 length + bytes.

#ifndef MIRAGE_DETECTORS_MODEL_CONTAINER_HPP_
#define MIRAGE_DETECTORS_MODEL_CONTAINER_HPP_

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "mirage/detectors/gradient_boosted.hpp"
#include "mirage/detectors/isolation_forest.hpp"
#include "mirage/detectors/mlp.hpp"
#include "mirage/detectors/random_forest.hpp"
#include "mirage/detectors/serialization.hpp"
#include "mirage/ensemble.hpp"
#include "mirage/flow_ingest.hpp"
#include "mirage/io.hpp"

namespace mirage {

inline constexpr std::string_view kContainerMagic = "MIRAGEMC";
inline constexpr std::uint32_t kContainerVersion = 1;

struct ModelBundle {
  Standardizer standardizer;
  std::shared_ptr<const RandomForestModel> rf;
  std::shared_ptr<const MlpModel> mlp;
  std::shared_ptr<const GradientBoostedModel> gbt;
  std::shared_ptr<const IsolationForestModel> iforest;
  EnsembleWeights weights;
  std::optional<double> theta;
  std::uint64_t seed = 0;
  // Free-form training metadata (hyperparameters, counts) echoed into reports.
  nlohmann::json metadata = nlohmann::json::object();

  Ensemble ensemble() const { return {rf, mlp, gbt, iforest}; }
};

inline nlohmann::json bundle_manifest(const ModelBundle& b) {
  nlohmann::json m;
  m["format_version"] = kContainerVersion;
  m["seed"] = b.seed;
  m["standardizer"] = {{"means", b.standardizer.means}, {"std_devs", b.standardizer.std_devs}};
  m["weights"] = {{"rf", b.weights.w_rf},
                  {"nn", b.weights.w_nn},
                  {"xgb", b.weights.w_xgb},
                  {"anom", b.weights.w_anom}};
  m["theta_opt"] = b.theta ? nlohmann::json(*b.theta) : nlohmann::json(nullptr);
  m["metadata"] = b.metadata;
  m["sections"] = {"rf", "mlp", "gbt", "iforest"};
  return m;
}

inline std::string serialize_bundle(const ModelBundle& b) {
  if (!b.rf || !b.mlp || !b.gbt || !b.iforest) throw UsageError("model bundle is incomplete");
  ByteWriter w;
  for (char c : kContainerMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kContainerVersion);
  w.str(bundle_manifest(b).dump());

  std::vector<std::pair<std::string, std::string>> sections;
  {
    ByteWriter s;
    b.rf->serialize(s);
    sections.emplace_back("rf", s.take());
  }
  {
    ByteWriter s;
    b.mlp->serialize(s);
    sections.emplace_back("mlp", s.take());
  }
  {
    ByteWriter s;
    b.gbt->serialize(s);
    sections.emplace_back("gbt", s.take());
  }
  {
    ByteWriter s;
    b.iforest->serialize(s);
    sections.emplace_back("iforest", s.take());
  }
  w.u32(static_cast<std::uint32_t>(sections.size()));
  for (const auto& [name, bytes] : sections) {
    w.str(name);
    w.u64(bytes.size());
    for (char c : bytes) w.u8(static_cast<std::uint8_t>(c));
  }
  return w.take();
}

inline ModelBundle deserialize_bundle(std::string_view bytes) {
  ByteReader r(bytes);
  for (char c : kContainerMagic) {
    if (r.remaining() == 0 || r.u8() != static_cast<std::uint8_t>(c)) {
      throw DataError("not a model container (bad magic)");
    }
  }
  const std::uint32_t version = r.u32();
  if (version != kContainerVersion) {
    throw DataError("unsupported model container version " + std::to_string(version));
  }
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model manifest is not valid JSON: ") + e.what());
  }

  ModelBundle b;
  try {
    b.seed = m.at("seed").get<std::uint64_t>();
    b.standardizer.means = m.at("standardizer").at("means").get<std::vector<double>>();
    b.standardizer.std_devs = m.at("standardizer").at("std_devs").get<std::vector<double>>();
    const auto& w = m.at("weights");
    b.weights = {w.at("rf").get<double>(), w.at("nn").get<double>(), w.at("xgb").get<double>(),
                 w.at("anom").get<double>()};
    if (!m.at("theta_opt").is_null()) b.theta = m.at("theta_opt").get<double>();
    b.metadata = m.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model manifest is missing fields: ") + e.what());
  }
  if (b.standardizer.means.size() != b.standardizer.std_devs.size()) {
    throw DataError("model manifest: standardizer moments differ in length");
  }

  std::map<std::string, std::string> sections;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const std::uint64_t size = r.u64();
    if (size > r.remaining()) throw DataError("model file: truncated section '" + name + "'");
    std::string payload;
    payload.reserve(size);
    for (std::uint64_t k = 0; k < size; ++k) payload.push_back(static_cast<char>(r.u8()));
    sections.emplace(std::move(name), std::move(payload));
  }
  auto section = [&](const std::string& name) -> const std::string& {
    const auto it = sections.find(name);
    if (it == sections.end()) throw DataError("model file: missing section '" + name + "'");
    return it->second;
  };
  {
    ByteReader s(section("rf"));
    b.rf = std::make_shared<RandomForestModel>(RandomForestModel::deserialize(s));
  }
  {
    ByteReader s(section("mlp"));
    b.mlp = std::make_shared<MlpModel>(MlpModel::deserialize(s));
  }
  {
    ByteReader s(section("gbt"));
    b.gbt = std::make_shared<GradientBoostedModel>(GradientBoostedModel::deserialize(s));
  }
  {
    ByteReader s(section("iforest"));
    b.iforest = std::make_shared<IsolationForestModel>(IsolationForestModel::deserialize(s));
  }
  const std::size_t dim = b.standardizer.dimension();
  for (const Scorer* s : {static_cast<const Scorer*>(b.rf.get()),
                          static_cast<const Scorer*>(b.mlp.get()),
                          static_cast<const Scorer*>(b.gbt.get()),
                          static_cast<const Scorer*>(b.iforest.get())}) {
    if (s->dimension() != dim) {
      throw DataError("model file: " + s->name() + " expects " + std::to_string(s->dimension()) +
                      " features, standardizer has " + std::to_string(dim));
    }
  }
  return b;
}

inline void save_bundle(const std::string& path, const ModelBundle& b) {
  write_file_atomic(path, serialize_bundle(b));
}

inline ModelBundle load_bundle(const std::string& path) { return deserialize_bundle(read_file(path)); }

}  // namespace mirage

#endif  // MIRAGE_DETECTORS_MODEL_CONTAINER_HPP_
