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

#ifndef MIRAGE_SIGNAL_BUS_HPP_
#define MIRAGE_SIGNAL_BUS_HPP_

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mirage/common.hpp"

namespace mirage {

/// Bus message <t, src, type, sev, data, conf>.
struct Signal {
  double t = 0.0;
  std::string src;
  std::string type;
  int sev = 0;  // 0..10
  nlohmann::json data = nlohmann::json::object();
  double conf = 0.0;
};

inline nlohmann::json signal_to_json(const Signal& s) {
  return {{"t", s.t},     {"src", s.src},   {"type", s.type},
          {"sev", s.sev}, {"data", s.data}, {"conf", s.conf}};
}

inline const std::vector<std::string>& default_signal_types() {
  static const std::vector<std::string> types{"detection", "profile_update", "escalation",
                                              "response"};
  return types;
}

using SignalPtr = std::shared_ptr<const Signal>;
using SignalHandler = std::function<void(const Signal&)>;
using SubscriptionId = std::uint64_t;

/// Blocking FIFO with a fixed capacity; push waits while full.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(T v) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
    if (closed_) return;
    items_.push_back(std::move(v));
    not_empty_.notify_one();
  }

  // False once the queue is closed and drained.
  bool pop(T& out) {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return false;
    out = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return true;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
  std::deque<T> items_;
  bool closed_ = false;
};

/// In-process publish/subscribe over a fixed registry of signal types.
///
/// Every subscription owns a bounded queue drained by its own worker thread,
/// so a handler runs on one thread at a time and sees its signals in publish
/// order. A full queue blocks the publisher; nothing is dropped.
class SignalBus {
 public:
  explicit SignalBus(const std::vector<std::string>& types = default_signal_types(),
                     std::size_t queue_capacity = 4096)
      : capacity_(queue_capacity) {
    if (capacity_ == 0) throw UsageError("signal queue capacity must be positive");
    for (const auto& t : types) routes_.emplace(t, std::make_shared<const Route>());
  }

  SignalBus(const SignalBus&) = delete;
  SignalBus& operator=(const SignalBus&) = delete;

  ~SignalBus() { shutdown(); }

  bool has_type(const std::string& type) const { return routes_.count(type) != 0; }
  std::size_t type_count() const { return routes_.size(); }

  SubscriptionId subscribe(const std::string& type, const std::string& subscriber,
                           SignalHandler handler) {
    std::unique_lock lock(mu_);
    auto it = routes_.find(type);
    if (it == routes_.end()) throw UsageError("unknown signal type '" + type + "'");
    if (!registered_.insert({subscriber, type}).second) {
      throw UsageError("subscriber '" + subscriber + "' is already registered for '" + type + "'");
    }
    auto sub = std::make_shared<Subscription>(next_id_++, subscriber, type, std::move(handler),
                                              capacity_);
    sub->worker = std::thread([raw = sub.get()] { raw->run(); });
    auto route = std::make_shared<Route>(*it->second);
    route->push_back(sub);
    it->second = std::move(route);
    all_.push_back(sub);
    return sub->id;
  }

  /// Enqueues the signal for every subscriber of its type and returns how many
  /// subscribers it was handed to.
  std::size_t publish(Signal s) {
    if (!(s.conf >= 0.0 && s.conf <= 1.0)) throw UsageError("signal confidence must lie in [0, 1]");
    if (s.sev < 0 || s.sev > 10) throw UsageError("signal severity must lie in [0, 10]");
    std::shared_ptr<const Route> route;
    {
      std::shared_lock lock(mu_);
      const auto it = routes_.find(s.type);
      if (it == routes_.end()) throw UsageError("unregistered signal type '" + s.type + "'");
      route = it->second;
    }
    {
      std::lock_guard lock(tap_mu_);
      if (tap_) *tap_ << signal_to_json(s).dump() << '\n';
    }
    if (route->empty()) return 0;
    auto ptr = std::make_shared<const Signal>(std::move(s));
    for (const auto& sub : *route) {
      sub->outstanding.fetch_add(1, std::memory_order_relaxed);
      sub->queue.push(ptr);
    }
    published_.fetch_add(1, std::memory_order_relaxed);
    return route->size();
  }

  // Blocks until every queued signal has been handled.
  void flush() {
    std::vector<std::shared_ptr<Subscription>> subs;
    {
      std::shared_lock lock(mu_);
      subs = all_;
    }
    for (auto& sub : subs) sub->wait_idle();
  }

  // Mirrors every published signal as one JSON line. The stream must outlive
  // the bus or be detached with set_tap(nullptr).
  void set_tap(std::ostream* out) {
    std::lock_guard lock(tap_mu_);
    tap_ = out;
  }

  std::uint64_t handler_errors() const {
    std::uint64_t n = 0;
    std::shared_lock lock(mu_);
    for (const auto& s : all_) n += s->errors.load();
    return n;
  }

  void shutdown() {
    std::vector<std::shared_ptr<Subscription>> subs;
    {
      std::unique_lock lock(mu_);
      subs.swap(all_);
    }
    for (auto& sub : subs) {
      sub->queue.close();
      if (sub->worker.joinable()) sub->worker.join();
    }
  }

 private:
  struct Subscription {
    Subscription(SubscriptionId id_, std::string subscriber_, std::string type_,
                 SignalHandler handler_, std::size_t capacity)
        : id(id_),
          subscriber(std::move(subscriber_)),
          type(std::move(type_)),
          handler(std::move(handler_)),
          queue(capacity) {}

    void run() {
      SignalPtr s;
      while (queue.pop(s)) {
        try {
          handler(*s);
        } catch (...) {
          errors.fetch_add(1);
        }
        s.reset();
        if (outstanding.fetch_sub(1) == 1) {
          std::lock_guard lock(idle_mu);
          idle_cv.notify_all();
        }
      }
    }

    void wait_idle() {
      std::unique_lock lock(idle_mu);
      idle_cv.wait(lock, [&] { return outstanding.load() == 0; });
    }

    SubscriptionId id;
    std::string subscriber;
    std::string type;
    SignalHandler handler;
    BoundedQueue<SignalPtr> queue;
    std::atomic<std::int64_t> outstanding{0};
    std::atomic<std::uint64_t> errors{0};
    std::mutex idle_mu;
    std::condition_variable idle_cv;
    std::thread worker;
  };

  using Route = std::vector<std::shared_ptr<Subscription>>;

  std::size_t capacity_;
  mutable std::shared_mutex mu_;
  // Routes are immutable snapshots replaced on subscribe, so publishers hold
  // the registry lock only for the lookup.
  std::unordered_map<std::string, std::shared_ptr<const Route>> routes_;
  std::set<std::pair<std::string, std::string>> registered_;
  std::vector<std::shared_ptr<Subscription>> all_;
  SubscriptionId next_id_ = 1;
  std::atomic<std::uint64_t> published_{0};
  std::mutex tap_mu_;
  std::ostream* tap_ = nullptr;
};

}  // namespace mirage

#endif  // MIRAGE_SIGNAL_BUS_HPP_
