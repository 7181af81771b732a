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

// Per-source escalation state machine over five deception levels and the
// response plan for each level:
//
//   L1 monitoring    log only
//   L2 variation     log + jitter delay ~ U[0, 500] ms
//   L3 deception     + decoy banner chosen by profile class
//   L4 obstruction   + progressive delay min(8000, 250 * 2^min(c, 5)) ms
//   L5 isolation     tarpit, isolation flag, endless-content decoy, 8000 ms
//
// Decoys are inert text templates; nothing here exposes a real service.

#ifndef MIRAGE_DECEPTION_HPP_
#define MIRAGE_DECEPTION_HPP_

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mirage/common.hpp"
#include "mirage/io.hpp"
#include "mirage/profiler.hpp"
#include "mirage/source_table.hpp"

namespace mirage {

inline constexpr int kMinLevel = 1;
inline constexpr int kMaxLevel = 5;

struct ThreatRecord {
  double t = 0.0;
  double confidence = 0.0;
  bool was_attack = false;
};

struct EscalationState {
  std::string source;
  int level = kMinLevel;
  std::deque<ThreatRecord> history;
  std::optional<double> last_attack_time;
  int consecutive_attacks = 0;
  // Quiet windows already charged against the level since the last attack.
  long quiet_windows_applied = 0;
};

struct DeceptionConfig {
  std::size_t history_capacity = 64;
  double quiet_window = 300.0;
  double high_confidence = 0.9;
  double burst_window = 60.0;
  int burst_attacks = 3;
};

/// Level increment for one detection. Base 2 at confidence >= 0.9, 1 above
/// theta, else 0; +1 when the source is automated and the prior history holds
/// at least three attacks in the last 60 s.
inline int delta(ProfileClass cls, const std::deque<ThreatRecord>& history, double confidence,
                 double theta, double now, const DeceptionConfig& cfg = {}) {
  if (!(confidence >= 0.0 && confidence <= 1.0)) throw UsageError("confidence must lie in [0, 1]");
  int base = 0;
  if (confidence >= cfg.high_confidence) {
    base = 2;
  } else if (confidence > theta) {
    base = 1;
  }
  if (base == 0) return 0;
  if (cls == ProfileClass::kAutomated) {
    const auto recent = std::count_if(history.begin(), history.end(), [&](const ThreatRecord& r) {
      return r.was_attack && now - r.t <= cfg.burst_window;
    });
    if (recent >= cfg.burst_attacks) return base + 1;
  }
  return base;
}

inline void append_history(EscalationState& s, const ThreatRecord& r, std::size_t capacity) {
  s.history.push_back(r);
  while (s.history.size() > capacity) s.history.pop_front();
}

// level' = min(5, level + d); the detection is appended to the history.
inline EscalationState escalate(EscalationState s, int d, const ThreatRecord& r,
                                std::size_t history_capacity = 64) {
  if (d < 0) throw UsageError("escalation increment must be >= 0");
  s.level = std::min(kMaxLevel, s.level + d);
  append_history(s, r, history_capacity);
  return s;
}

// One level down per full quiet window since the last attack, floored at 1.
inline EscalationState deescalate(EscalationState s, double now, double quiet_window = 300.0) {
  if (!s.last_attack_time || !(quiet_window > 0.0)) return s;
  const double quiet = now - *s.last_attack_time;
  if (quiet <= 0.0) return s;
  const auto windows = static_cast<long>(std::floor(quiet / quiet_window));
  const long due = windows - s.quiet_windows_applied;
  if (due > 0) {
    s.level = static_cast<int>(std::max<long>(kMinLevel, s.level - due));
    s.quiet_windows_applied = windows;
  }
  return s;
}

/// Decoy templates per profile class. Identifiers only; the content behind
/// them is served by whatever front end consumes the plans.
struct DecoyCatalog {
  std::map<std::string, std::vector<std::string>> by_class;
  std::string endless_content = "endless-content/slow-drip";

  static DecoyCatalog defaults() {
    DecoyCatalog c;
    c.by_class = {
        {"automated", {"banner/openssh-7.2-legacy", "banner/apache-2.2-cgi", "file/robots-admin-path"}},
        {"rapid", {"banner/wordpress-4.9-login", "file/backup-sql-dump", "banner/phpmyadmin-4.0"}},
        {"deliberate", {"file/fake-credentials-env", "banner/jenkins-1.6-console", "file/ssh-key-stub"}},
        {"standard", {"banner/iis-7.5-default", "file/config-bak", "banner/tomcat-manager"}},
    };
    return c;
  }

  static DecoyCatalog from_json(const nlohmann::json& j) {
    DecoyCatalog c;
    if (!j.is_object()) throw DataError("decoy catalog must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "endless_content") {
        c.endless_content = value.get<std::string>();
        continue;
      }
      if (!parse_profile_class(key)) throw DataError("decoy catalog: unknown class '" + key + "'");
      c.by_class[key] = value.get<std::vector<std::string>>();
    }
    return c;
  }

  static DecoyCatalog load(const std::string& path) {
    try {
      return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("decoy catalog '" + path + "': " + e.what());
    }
  }

  std::optional<std::string> pick(ProfileClass cls, Rng& rng) const {
    auto it = by_class.find(to_string(cls));
    if (it == by_class.end() || it->second.empty()) it = by_class.find("standard");
    if (it == by_class.end() || it->second.empty()) return std::nullopt;
    return it->second[rng.index(it->second.size())];
  }
};

struct ResponsePlan {
  int level = kMinLevel;
  std::vector<std::string> actions;
  double delay_ms = 0.0;
  std::optional<std::string> decoy;
};

inline constexpr double kMaxJitterMs = 500.0;
inline constexpr double kMaxDelayMs = 8000.0;

inline double progressive_delay_ms(int consecutive_attacks) {
  const int e = std::clamp(consecutive_attacks, 0, 5);
  return std::min(kMaxDelayMs, 250.0 * std::exp2(e));
}

/// Deterministic in (level, profile, consecutive attacks, catalog, seed).
/// Delays never decrease with the level: L4 takes the larger of the jitter and
/// the progressive delay, and L5 is pinned at the 8000 ms ceiling.
inline ResponsePlan plan_response(int level, const Profile& profile, int consecutive_attacks,
                                  const DecoyCatalog& catalog, std::uint64_t seed) {
  if (level < kMinLevel || level > kMaxLevel) {
    throw UsageError("invalid escalation level " + std::to_string(level));
  }
  Rng rng(seed);
  const double jitter = rng.uniform() * kMaxJitterMs;
  const ProfileClass cls = classify_profile(profile).cls;
  ResponsePlan plan;
  plan.level = level;
  plan.actions.push_back("log");
  switch (level) {
    case 1:
      break;
    case 2:
      plan.actions.push_back("jitter_delay");
      plan.delay_ms = jitter;
      break;
    case 3:
      plan.actions.push_back("jitter_delay");
      plan.actions.push_back("decoy_banner");
      plan.delay_ms = jitter;
      plan.decoy = catalog.pick(cls, rng);
      break;
    case 4:
      plan.actions.push_back("progressive_delay");
      plan.actions.push_back("decoy_banner");
      plan.delay_ms = std::max(jitter, progressive_delay_ms(consecutive_attacks));
      plan.decoy = catalog.pick(cls, rng);
      break;
    default:
      plan.actions.push_back("tarpit");
      plan.actions.push_back("isolate");
      plan.actions.push_back("endless_content");
      plan.delay_ms = kMaxDelayMs;
      plan.decoy = catalog.endless_content;
      break;
  }
  return plan;
}

inline nlohmann::json plan_to_json(const ResponsePlan& p) {
  return {{"level", p.level},
          {"actions", p.actions},
          {"delay_ms", p.delay_ms},
          {"decoy", p.decoy ? nlohmann::json(*p.decoy) : nlohmann::json(nullptr)}};
}

struct EscalationUpdate {
  EscalationState state;
  int increment = 0;
};

/// Escalation states for all sources, one serialized update per event.
class EscalationTracker {
 public:
  explicit EscalationTracker(DeceptionConfig cfg = {}) : cfg_(cfg) {}

  const DeceptionConfig& config() const { return cfg_; }

  /// Applies pending quiet-window decay, then, for an attack decision, the
  /// level increment. Every event lands in the threat history.
  EscalationUpdate on_event(const std::string& source, double now, bool attack, double confidence,
                            double theta, ProfileClass cls) {
    return table_.with(
        source,
        [&] {
          EscalationState s;
          s.source = source;
          return s;
        },
        [&](EscalationState& s, bool) {
          s = deescalate(std::move(s), now, cfg_.quiet_window);
          const ThreatRecord rec{now, confidence, attack};
          int d = 0;
          if (attack) {
            d = delta(cls, s.history, confidence, theta, now, cfg_);
            s = escalate(std::move(s), d, rec, cfg_.history_capacity);
            s.last_attack_time = now;
            s.quiet_windows_applied = 0;
            ++s.consecutive_attacks;
          } else {
            append_history(s, rec, cfg_.history_capacity);
            s.consecutive_attacks = 0;
          }
          return EscalationUpdate{s, d};
        });
  }

  std::optional<EscalationState> get(const std::string& source) const { return table_.find(source); }
  int level(const std::string& source) const {
    return table_.visit(source, [](const EscalationState& s) { return s.level; }).value_or(kMinLevel);
  }
  std::vector<std::pair<std::string, EscalationState>> snapshot() const { return table_.snapshot(); }

 private:
  DeceptionConfig cfg_;
  SourceTable<EscalationState> table_;
};

}  // namespace mirage

#endif  // MIRAGE_DECEPTION_HPP_
