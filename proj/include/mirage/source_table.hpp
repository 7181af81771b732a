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

#ifndef MIRAGE_SOURCE_TABLE_HPP_
#define MIRAGE_SOURCE_TABLE_HPP_

#include <algorithm>
#include <array>
#include <mutex>
#include <optional>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mirage/common.hpp"

namespace mirage {

/// Hash map from source identifier to per-source state, split into
/// independently locked shards. Calls for one source are serialized; calls
/// for sources in different shards run concurrently.
template <typename T, std::size_t Shards = 64>
class SourceTable {
 public:
  // Runs fn(state, created) under the source's shard lock, creating the entry
  // with make() on first use.
  template <typename Make, typename Fn>
  auto with(const std::string& source, Make&& make, Fn&& fn) {
    Shard& s = shard_for(source);
    std::lock_guard lock(s.mu);
    auto it = s.map.find(source);
    bool created = false;
    if (it == s.map.end()) {
      it = s.map.emplace(source, make()).first;
      created = true;
    }
    return fn(it->second, created);
  }

  std::optional<T> find(const std::string& source) const {
    const Shard& s = shard_for(source);
    std::lock_guard lock(s.mu);
    const auto it = s.map.find(source);
    if (it == s.map.end()) return std::nullopt;
    return it->second;
  }

  // Runs fn(const state&) under the shard lock if the source exists.
  template <typename Fn>
  auto visit(const std::string& source, Fn&& fn) const
      -> std::optional<std::invoke_result_t<Fn, const T&>> {
    const Shard& s = shard_for(source);
    std::lock_guard lock(s.mu);
    const auto it = s.map.find(source);
    if (it == s.map.end()) return std::nullopt;
    return fn(it->second);
  }

  bool contains(const std::string& source) const {
    const Shard& s = shard_for(source);
    std::lock_guard lock(s.mu);
    return s.map.count(source) != 0;
  }

  template <typename Pred>
  std::size_t erase_if(Pred&& pred) {
    std::size_t erased = 0;
    for (auto& s : shards_) {
      std::lock_guard lock(s.mu);
      erased += std::erase_if(s.map, [&](const auto& kv) { return pred(kv.second); });
    }
    return erased;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& s : shards_) {
      std::lock_guard lock(s.mu);
      n += s.map.size();
    }
    return n;
  }

  // Copies of all entries, ordered by source.
  std::vector<std::pair<std::string, T>> snapshot() const {
    std::vector<std::pair<std::string, T>> out;
    for (const auto& s : shards_) {
      std::lock_guard lock(s.mu);
      out.insert(out.end(), s.map.begin(), s.map.end());
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }

 private:
  struct Shard {
    mutable std::mutex mu;
    std::unordered_map<std::string, T> map;
  };

  Shard& shard_for(const std::string& source) { return shards_[fnv1a(source) % Shards]; }
  const Shard& shard_for(const std::string& source) const {
    return shards_[fnv1a(source) % Shards];
  }

  std::array<Shard, Shards> shards_;
};

}  // namespace mirage

#endif  // MIRAGE_SOURCE_TABLE_HPP_
