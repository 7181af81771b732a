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

// Per-source behavioural profiles: timing moments, request count, endpoint
// diversity and pattern tags, plus the four-way timing classification.

#ifndef MIRAGE_PROFILER_HPP_
#define MIRAGE_PROFILER_HPP_

#include <cmath>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "mirage/common.hpp"
#include "mirage/source_table.hpp"

namespace mirage {

enum class ProfileClass { kAutomated, kRapid, kDeliberate, kStandard };

inline std::string to_string(ProfileClass c) {
  switch (c) {
    case ProfileClass::kAutomated: return "automated";
    case ProfileClass::kRapid: return "rapid";
    case ProfileClass::kDeliberate: return "deliberate";
    case ProfileClass::kStandard: return "standard";
  }
  return "standard";
}

inline std::optional<ProfileClass> parse_profile_class(std::string_view s) {
  if (s == "automated") return ProfileClass::kAutomated;
  if (s == "rapid") return ProfileClass::kRapid;
  if (s == "deliberate") return ProfileClass::kDeliberate;
  if (s == "standard") return ProfileClass::kStandard;
  return std::nullopt;
}

struct Profile {
  std::string source;
  double tau = 0.0;        // mean inter-request gap, seconds
  double sigma_tau = 0.0;  // population std of the gaps, seconds
  std::size_t n = 0;       // requests observed
  double rho = 1.0;        // distinct endpoints / n
  std::set<std::string> lambda;
  double last_seen = 0.0;
};

/// Ordered cases, first match wins.
inline ProfileClass classify_timing(double tau, double sigma_tau) {
  if (sigma_tau < 0.5 && tau < 1.0) return ProfileClass::kAutomated;
  if (tau < 2.0 && sigma_tau >= 0.5) return ProfileClass::kRapid;
  if (tau > 10.0) return ProfileClass::kDeliberate;
  return ProfileClass::kStandard;
}

struct ProfileClassification {
  ProfileClass cls = ProfileClass::kStandard;
  // Fewer than min_observations requests: class forced to standard.
  bool provisional = false;
};

inline constexpr std::size_t kMinObservations = 3;

inline ProfileClassification classify_profile(const Profile& p,
                                              std::size_t min_observations = kMinObservations) {
  if (p.n < min_observations) return {ProfileClass::kStandard, true};
  return {classify_timing(p.tau, p.sigma_tau), false};
}

class TimeRegression : public DataError {
 public:
  using DataError::DataError;
};

struct ProfilerConfig {
  std::size_t buffer_size = 256;
  std::size_t min_observations = kMinObservations;
  double ttl_seconds = 3600.0;
};

class ProfileStore {
 public:
  explicit ProfileStore(ProfilerConfig cfg = {}) : cfg_(cfg) {
    if (cfg_.buffer_size < 2) throw UsageError("profile buffer must hold at least 2 arrivals");
  }

  const ProfilerConfig& config() const { return cfg_; }

  /// Records one request. Timing moments are recomputed over the gaps of the
  /// retained arrival buffer. A timestamp older than the source's last one is
  /// rejected and leaves the profile untouched.
  Profile observe(const std::string& source, double timestamp, const std::string& endpoint,
                  const std::set<std::string>& patterns = {}) {
    return table_.with(
        source, [&] { return Entry{}; },
        [&](Entry& e, bool created) {
          if (!created && timestamp < e.profile.last_seen) {
            throw TimeRegression("time regression for source '" + source + "': " +
                                 std::to_string(timestamp) + " < " +
                                 std::to_string(e.profile.last_seen));
          }
          Profile& p = e.profile;
          if (created) p.source = source;
          e.arrivals.push_back(timestamp);
          if (e.arrivals.size() > cfg_.buffer_size) e.arrivals.pop_front();
          e.endpoints.insert(endpoint);
          ++p.n;
          p.last_seen = timestamp;
          p.rho = static_cast<double>(e.endpoints.size()) / static_cast<double>(p.n);
          p.lambda.insert(patterns.begin(), patterns.end());
          recompute_moments(e);
          return p;
        });
  }

  std::optional<Profile> get(const std::string& source) const {
    return table_.visit(source, [](const Entry& e) { return e.profile; });
  }

  // Profiles idle for strictly longer than ttl are removed.
  std::size_t evict_stale(double now, double ttl) {
    return table_.erase_if([&](const Entry& e) { return now - e.profile.last_seen > ttl; });
  }
  std::size_t evict_stale(double now) { return evict_stale(now, cfg_.ttl_seconds); }

  std::size_t size() const { return table_.size(); }

  std::vector<Profile> profiles() const {
    std::vector<Profile> out;
    for (auto& [_, e] : table_.snapshot()) out.push_back(e.profile);
    return out;
  }

 private:
  struct Entry {
    Profile profile;
    std::deque<double> arrivals;
    std::unordered_set<std::string> endpoints;
  };

  static void recompute_moments(Entry& e) {
    const std::size_t gaps = e.arrivals.size() - 1;
    if (gaps == 0) {
      e.profile.tau = e.profile.sigma_tau = 0.0;
      return;
    }
    double sum = 0.0;
    for (std::size_t i = 1; i < e.arrivals.size(); ++i) sum += e.arrivals[i] - e.arrivals[i - 1];
    const double mean = sum / static_cast<double>(gaps);
    double ss = 0.0;
    for (std::size_t i = 1; i < e.arrivals.size(); ++i) {
      const double d = (e.arrivals[i] - e.arrivals[i - 1]) - mean;
      ss += d * d;
    }
    e.profile.tau = mean;
    e.profile.sigma_tau = std::sqrt(ss / static_cast<double>(gaps));
  }

  ProfilerConfig cfg_;
  SourceTable<Entry> table_;
};

/// Profile report row: {source, tau, sigma_tau, n, rho, lambda, class}.
inline nlohmann::json profile_to_json(const Profile& p, std::size_t min_observations = kMinObservations) {
  const auto c = classify_profile(p, min_observations);
  return {{"source", p.source},
          {"tau", p.tau},
          {"sigma_tau", p.sigma_tau},
          {"n", p.n},
          {"rho", p.rho},
          {"lambda", p.lambda},
          {"class", to_string(c.cls)},
          {"provisional", c.provisional}};
}

}  // namespace mirage

#endif  // MIRAGE_PROFILER_HPP_
