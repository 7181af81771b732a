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

// Per-event pipeline: score -> combine -> classify -> profile -> escalate ->
// plan, with every stage announced on the signal bus.

#ifndef MIRAGE_ORCHESTRATOR_HPP_
#define MIRAGE_ORCHESTRATOR_HPP_

#include <cmath>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mirage/deception.hpp"
#include "mirage/ensemble.hpp"
#include "mirage/evaluation.hpp"
#include "mirage/flow_ingest.hpp"
#include "mirage/profiler.hpp"
#include "mirage/signal_bus.hpp"

namespace mirage {

struct TrafficEvent {
  double ts = 0.0;
  std::string source;
  std::string endpoint;
  std::vector<double> features;  // raw; the engine standardizes
  std::optional<int> label;
  std::optional<std::string> category;
};

struct EventOutcome {
  double ts = 0.0;
  std::string source;
  DetectorScores scores;
  double probability = 0.0;
  Decision decision = Decision::kBenign;
  ProfileClass profile_class = ProfileClass::kStandard;
  bool provisional = true;
  int previous_level = kMinLevel;
  int level = kMinLevel;
  int increment = 0;
  ResponsePlan plan;
};

inline nlohmann::json outcome_to_json(const EventOutcome& o) {
  return {{"ts", o.ts},
          {"src", o.source},
          {"scores",
           {{"rf", o.scores.p_rf}, {"nn", o.scores.p_nn}, {"xgb", o.scores.p_xgb}, {"anom", o.scores.p_anom}}},
          {"p", o.probability},
          {"decision", o.decision == Decision::kAttack ? "attack" : "benign"},
          {"profile_class", to_string(o.profile_class)},
          {"provisional", o.provisional},
          {"level_before", o.previous_level},
          {"level", o.level},
          {"delta", o.increment},
          {"plan", plan_to_json(o.plan)}};
}

struct EngineConfig {
  EnsembleWeights weights;
  double theta = 0.5;
  ProfilerConfig profiler;
  DeceptionConfig deception;
  std::uint64_t seed = 42;
  // An isolation score above this adds the "isolation_anomaly" profile tag.
  double anomaly_tag_threshold = 0.6;
};

/// One engine processes one ordered event stream. Models are shared and
/// immutable; profile and escalation state belong to the engine.
class Engine {
 public:
  Engine(Ensemble ensemble, Standardizer standardizer, EngineConfig cfg,
         std::shared_ptr<SignalBus> bus = nullptr, DecoyCatalog catalog = DecoyCatalog::defaults())
      : ensemble_(std::move(ensemble)),
        standardizer_(std::move(standardizer)),
        cfg_(std::move(cfg)),
        bus_(bus ? std::move(bus) : std::make_shared<SignalBus>()),
        catalog_(std::move(catalog)),
        profiles_(cfg_.profiler),
        tracker_(cfg_.deception) {
    cfg_.weights.validate();
    if (!ensemble_.rf || !ensemble_.nn || !ensemble_.xgb || !ensemble_.anom) {
      throw UsageError("engine needs all four detectors");
    }
    if (standardizer_.dimension() != ensemble_.dimension()) {
      throw UsageError("standardizer and detectors disagree on the feature dimension");
    }
    if (!(cfg_.theta >= 0.0 && cfg_.theta <= 1.0)) throw UsageError("theta must lie in [0, 1]");
  }

  const EngineConfig& config() const { return cfg_; }
  SignalBus& bus() { return *bus_; }
  const ProfileStore& profiles() const { return profiles_; }
  const EscalationTracker& escalation() const { return tracker_; }
  std::size_t skipped() const { return skipped_; }
  std::size_t processed() const { return processed_; }

  /// Returns nullopt, and counts the event as skipped, when it cannot be
  /// scored. A timestamp older than the source's previous one is a DataError.
  std::optional<EventOutcome> process(const TrafficEvent& e) {
    if (e.features.size() != standardizer_.dimension() ||
        !std::all_of(e.features.begin(), e.features.end(), [](double v) { return std::isfinite(v); })) {
      ++skipped_;
      return std::nullopt;
    }
    if (e.source.empty()) throw DataError("event has an empty source");
    std::vector<double> x(e.features.size());
    standardizer_.transform(e.features, x);

    EventOutcome o;
    o.ts = e.ts;
    o.source = e.source;
    o.scores = ensemble_.score(x);
    o.probability = combine(o.scores, cfg_.weights);
    o.decision = classify(o.probability, cfg_.theta);
    const bool attack = o.decision == Decision::kAttack;
    bus_->publish({e.ts, e.source, "detection", severity(o.probability),
                   {{"p", o.probability},
                    {"decision", attack ? "attack" : "benign"},
                    {"scores", {o.scores.p_rf, o.scores.p_nn, o.scores.p_xgb, o.scores.p_anom}}},
                   o.probability});

    std::set<std::string> tags;
    if (attack) tags.insert("ensemble_attack");
    if (o.scores.p_anom > cfg_.anomaly_tag_threshold) tags.insert("isolation_anomaly");
    Profile profile;
    try {
      profile = profiles_.observe(e.source, e.ts, e.endpoint, tags);
    } catch (const TimeRegression& err) {
      throw DataError(err.what());
    }
    const auto pc = classify_profile(profile, cfg_.profiler.min_observations);
    o.profile_class = pc.cls;
    o.provisional = pc.provisional;
    bus_->publish({e.ts, e.source, "profile_update", 0, profile_to_json(profile, cfg_.profiler.min_observations),
                   pc.provisional ? 0.5 : 1.0});

    o.previous_level = tracker_.level(e.source);
    const EscalationUpdate up =
        tracker_.on_event(e.source, e.ts, attack, o.probability, cfg_.theta, pc.cls);
    o.level = up.state.level;
    o.increment = up.increment;
    if (attack) {
      bus_->publish({e.ts, e.source, "escalation", 2 * o.level,
                     {{"from", o.previous_level}, {"to", o.level}, {"delta", o.increment},
                      {"profile_class", to_string(pc.cls)}},
                     o.probability});
    }

    const std::uint64_t plan_seed = mix_seed(cfg_.seed, fnv1a(e.source) + profile.n);
    o.plan = plan_response(o.level, profile, up.state.consecutive_attacks, catalog_, plan_seed);
    bus_->publish({e.ts, e.source, "response", 2 * o.level, plan_to_json(o.plan), o.probability});
    ++processed_;
    return o;
  }

  std::size_t evict_stale(double now) { return profiles_.evict_stale(now); }

 private:
  static int severity(double p) { return static_cast<int>(std::lround(p * 10.0)); }

  Ensemble ensemble_;
  Standardizer standardizer_;
  EngineConfig cfg_;
  std::shared_ptr<SignalBus> bus_;
  DecoyCatalog catalog_;
  ProfileStore profiles_;
  EscalationTracker tracker_;
  std::size_t skipped_ = 0;
  std::size_t processed_ = 0;
};

struct ReplayResult {
  EvaluationReport report;
  std::vector<EventOutcome> outcomes;
};

/// Processes labelled events in order and evaluates decisions against the
/// labels. Events must be sorted by timestamp.
inline ReplayResult replay(Engine& engine, const std::vector<TrafficEvent>& events,
                           const EvaluationOptions& opt = {}, bool keep_outcomes = false) {
  Labels y, pred;
  std::vector<std::string> cats;
  ReplayResult out;
  const std::size_t skipped_before = engine.skipped();
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (i > 0 && e.ts < events[i - 1].ts) throw DataError("replay events are not timestamp-ordered");
    if (!e.label) throw DataError("replay event without a ground-truth label");
    auto o = engine.process(e);
    if (!o) continue;
    y.push_back(*e.label);
    pred.push_back(o->decision == Decision::kAttack ? 1 : 0);
    cats.push_back(e.category.value_or(*e.label == 1 ? "attack" : "BENIGN"));
    if (keep_outcomes) out.outcomes.push_back(std::move(*o));
  }
  engine.bus().flush();
  if (y.empty()) throw DataError("replay scored no events");
  out.report = evaluate(y, pred, cats, opt);
  out.report.skipped_events = engine.skipped() - skipped_before;
  const auto& w = engine.config().weights;
  out.report.config["theta"] = engine.config().theta;
  out.report.config["weights"] = {{"rf", w.w_rf}, {"nn", w.w_nn}, {"xgb", w.w_xgb}, {"anom", w.w_anom}};
  out.report.seeds["engine"] = engine.config().seed;
  return out;
}

struct TimingAssignment {
  double rate = 100.0;  // events per second across the whole stream
  std::size_t benign_sources = 500;
  std::size_t attack_sources_per_category = 4;
  std::size_t endpoints = 64;
  std::uint64_t seed = 42;
};

/// Flow CSVs carry no arrival times, so replay synthesizes them: evenly spaced
/// timestamps at `rate`, benign flows spread over a pool of benign sources,
/// attack flows over a few sources per category.
inline std::vector<TrafficEvent> events_from_dataset(const Dataset& d, const TimingAssignment& t) {
  if (!(t.rate > 0.0) || t.benign_sources == 0 || t.attack_sources_per_category == 0 ||
      t.endpoints == 0) {
    throw UsageError("invalid timing assignment");
  }
  Rng rng(t.seed);
  std::vector<TrafficEvent> out;
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& r = d.records[i];
    TrafficEvent e;
    e.ts = static_cast<double>(i) / t.rate;
    if (r.label == 1) {
      e.source = "atk-" + r.category + "-" + std::to_string(rng.index(t.attack_sources_per_category));
    } else {
      e.source = "host-" + std::to_string(rng.index(t.benign_sources));
    }
    e.endpoint = "/p/" + std::to_string(rng.index(t.endpoints));
    e.features = r.features;
    e.label = r.label;
    e.category = r.category;
    out.push_back(std::move(e));
  }
  return out;
}

inline std::string timing_note(const TimingAssignment& t) {
  return "timestamps and sources are synthetic: " + std::to_string(t.rate) + " events/s, " +
         std::to_string(t.benign_sources) + " benign sources, " +
         std::to_string(t.attack_sources_per_category) + " sources per attack category";
}

struct Scenario {
  ProfileClass cls = ProfileClass::kAutomated;
  double mean_gap = 0.3;  // seconds
  double gap_std = 0.1;
  std::size_t events = 50;
  double attack_mix = 1.0;  // share of events drawn from the attack pool
  std::string source = "sim-attacker";
  double start = 0.0;
  std::size_t endpoints = 32;
};

struct FeaturePools {
  FeatureMatrix benign;
  FeatureMatrix attack;
};

/// Throws UsageError when the requested timing cannot produce the class.
inline void check_scenario(const Scenario& s) {
  if (!(s.mean_gap > 0.0) || !(s.gap_std >= 0.0) || !std::isfinite(s.mean_gap) || !std::isfinite(s.gap_std)) {
    throw UsageError("scenario gaps must be positive and finite");
  }
  if (!(s.attack_mix >= 0.0 && s.attack_mix <= 1.0)) throw UsageError("attack mix must lie in [0, 1]");
  if (s.events == 0 || s.endpoints == 0) throw UsageError("scenario needs events and endpoints");
  const ProfileClass got = classify_timing(s.mean_gap, s.gap_std);
  if (got != s.cls) {
    throw UsageError("infeasible scenario: tau=" + std::to_string(s.mean_gap) +
                     " sigma=" + std::to_string(s.gap_std) + " classifies as " + to_string(got) +
                     ", not " + to_string(s.cls));
  }
}

/// Synthetic source whose gaps are drawn from N(mean_gap, gap_std) truncated
/// to positive values; features are rows drawn from the pools.
inline std::vector<TrafficEvent> scenario_events(const Scenario& s, const FeaturePools& pools,
                                                 std::uint64_t seed) {
  check_scenario(s);
  if (s.attack_mix > 0.0 && pools.attack.empty()) throw UsageError("scenario needs attack features");
  if (s.attack_mix < 1.0 && pools.benign.empty()) throw UsageError("scenario needs benign features");
  Rng rng(seed);
  std::vector<TrafficEvent> out;
  double t = s.start;
  for (std::size_t i = 0; i < s.events; ++i) {
    if (i > 0) {
      double gap;
      do {
        gap = rng.normal(s.mean_gap, s.gap_std);
      } while (!(gap > 0.0));
      t += gap;
    }
    TrafficEvent e;
    e.ts = t;
    e.source = s.source;
    e.endpoint = "/p/" + std::to_string(rng.index(s.endpoints));
    const bool attack = rng.uniform() < s.attack_mix;
    const FeatureMatrix& pool = attack ? pools.attack : pools.benign;
    const auto row = pool.row(rng.index(pool.rows()));
    e.features.assign(row.begin(), row.end());
    e.label = attack ? 1 : 0;
    e.category = attack ? "simulated" : "BENIGN";
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<EventOutcome> simulate_attacker(Engine& engine, const Scenario& s,
                                                   const FeaturePools& pools, std::uint64_t seed) {
  std::vector<EventOutcome> out;
  for (const auto& e : scenario_events(s, pools, seed)) {
    if (auto o = engine.process(e)) out.push_back(std::move(*o));
  }
  engine.bus().flush();
  return out;
}

/// One live event: {ts, src, endpoint, features:[...], label?, category?}.
inline TrafficEvent parse_event_json(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    TrafficEvent e;
    e.ts = j.at("ts").get<double>();
    e.source = j.at("src").get<std::string>();
    e.endpoint = j.value("endpoint", std::string("/"));
    e.features = j.at("features").get<std::vector<double>>();
    if (j.contains("label") && !j["label"].is_null()) {
      const int label = j["label"].get<int>();
      if (label != 0 && label != 1) throw DataError("event label must be 0 or 1");
      e.label = label;
    }
    if (j.contains("category") && !j["category"].is_null()) e.category = j["category"].get<std::string>();
    return e;
  } catch (const nlohmann::json::exception& err) {
    throw DataError(std::string("malformed event: ") + err.what());
  }
}

}  // namespace mirage

#endif  // MIRAGE_ORCHESTRATOR_HPP_
