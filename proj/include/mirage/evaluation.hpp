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

#ifndef MIRAGE_EVALUATION_HPP_
#define MIRAGE_EVALUATION_HPP_

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mirage/common.hpp"

namespace mirage {

struct ConfusionMatrix {
  std::size_t tn = 0, fp = 0, fn = 0, tp = 0;
  std::size_t total() const { return tn + fp + fn + tp; }
  bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) {
    throw UsageError("labels and predictions differ in length");
  }
  ConfusionMatrix m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i], p = predictions[i];
    if ((y != 0 && y != 1) || (p != 0 && p != 1)) throw UsageError("labels must be binary");
    if (y == 1) {
      (p == 1 ? m.tp : m.fn)++;
    } else {
      (p == 1 ? m.fp : m.tn)++;
    }
  }
  return m;
}

/// Ratios with a zero denominator are absent rather than 0.
struct MetricsReport {
  double accuracy = 0.0;
  std::optional<double> precision, recall, f1, fpr;
};

inline MetricsReport metrics(const ConfusionMatrix& m) {
  if (m.total() == 0) throw UsageError("metrics need at least one sample");
  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  MetricsReport r;
  r.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
  r.precision = ratio(m.tp, m.tp + m.fp);
  r.recall = ratio(m.tp, m.tp + m.fn);
  r.fpr = ratio(m.fp, m.fp + m.tn);
  if (r.precision && r.recall && *r.precision + *r.recall > 0.0) {
    r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
  } else if (r.precision && r.recall) {
    r.f1 = 0.0;
  }
  return r;
}

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"accuracy", "precision", "recall", "f1", "fpr"};
  return names;
}

inline std::optional<double> metric_value(const MetricsReport& r, const std::string& name) {
  if (name == "accuracy") return r.accuracy;
  if (name == "precision") return r.precision;
  if (name == "recall") return r.recall;
  if (name == "f1") return r.f1;
  if (name == "fpr") return r.fpr;
  return std::nullopt;
}

struct Interval {
  double lo = 0.0, hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double v) const { return lo <= v && v <= hi; }
};

struct BootstrapResult {
  std::map<std::string, Interval> intervals;
  std::size_t requested = 0;
  std::size_t valid = 0;
  std::size_t skipped = 0;  // single-class resamples
  double level = 0.95;
  std::uint64_t seed = 0;
};

// Linear-interpolated quantile of sorted data (numpy's default rule).
inline double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::nan("");
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + frac * (v[i + 1] - v[i]);
}

/// Percentile bootstrap. Resample r draws from its own stream
/// mix_seed(seed, r), so results do not depend on evaluation order.
inline BootstrapResult bootstrap_ci(std::span<const int> labels, std::span<const int> predictions,
                                    std::size_t n_resamples = 1000, double level = 0.95,
                                    std::uint64_t seed = 42, std::size_t min_valid = 900) {
  if (labels.size() != predictions.size()) throw UsageError("labels and predictions differ in length");
  if (labels.empty()) throw UsageError("bootstrap needs a non-empty sample");
  const std::size_t pos = count_positive(labels);
  if (pos == 0 || pos == labels.size()) throw DataError("bootstrap needs both classes present");
  if (!(level > 0.0 && level < 1.0)) throw UsageError("confidence level must lie in (0, 1)");

  const std::size_t n = labels.size();
  std::map<std::string, std::vector<double>> samples;
  BootstrapResult out;
  out.requested = n_resamples;
  out.level = level;
  out.seed = seed;
  for (std::size_t r = 0; r < n_resamples; ++r) {
    Rng rng(mix_seed(seed, r));
    ConfusionMatrix m;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = rng.index(n);
      if (labels[i] == 1) {
        (predictions[i] == 1 ? m.tp : m.fn)++;
      } else {
        (predictions[i] == 1 ? m.fp : m.tn)++;
      }
    }
    if (m.tp + m.fn == 0 || m.tn + m.fp == 0) {
      ++out.skipped;
      continue;
    }
    ++out.valid;
    const MetricsReport mr = metrics(m);
    for (const auto& name : metric_names()) {
      if (const auto v = metric_value(mr, name)) samples[name].push_back(*v);
    }
  }
  if (out.valid < std::min(min_valid, n_resamples)) {
    throw DataError("bootstrap produced only " + std::to_string(out.valid) +
                    " two-class resamples (need " + std::to_string(min_valid) + ")");
  }
  const double alpha = 1.0 - level;
  for (auto& [name, v] : samples) {
    std::sort(v.begin(), v.end());
    out.intervals[name] = {quantile_sorted(v, alpha / 2.0), quantile_sorted(v, 1.0 - alpha / 2.0)};
  }
  return out;
}

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Two-sample t-test without the equal-variance assumption; Satterthwaite
/// degrees of freedom, two-sided p-value.
inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw UsageError("Welch's t-test needs >= 2 values per sample");
  auto moments = [](std::span<const double> x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / static_cast<double>(x.size() - 1)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  if (!std::isfinite(va) || !std::isfinite(vb)) throw UsageError("sample variance is not finite");
  if (va == 0.0 && vb == 0.0) throw DataError("Welch's t-test is undefined when both variances are zero");
  const double sa = va / static_cast<double>(a.size());
  const double sb = vb / static_cast<double>(b.size());
  WelchResult r;
  r.t = (ma - mb) / std::sqrt(sa + sb);
  r.df = (sa + sb) * (sa + sb) /
         (sa * sa / static_cast<double>(a.size() - 1) + sb * sb / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(r.df);
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

struct CategoryRate {
  std::size_t samples = 0;
  std::size_t detected = 0;
  double rate() const { return samples == 0 ? 0.0 : static_cast<double>(detected) / static_cast<double>(samples); }
};

/// Recall per attack category; categories with no attack samples are omitted.
inline std::map<std::string, CategoryRate> per_category(std::span<const int> labels,
                                                        std::span<const int> predictions,
                                                        std::span<const std::string> categories) {
  if (labels.size() != predictions.size() || labels.size() != categories.size()) {
    throw UsageError("labels, predictions and categories differ in length");
  }
  std::map<std::string, CategoryRate> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    auto& c = out[categories[i]];
    ++c.samples;
    if (predictions[i] == 1) ++c.detected;
  }
  return out;
}

/// Published comparison rows; rendered verbatim and never recomputed.
struct BaselineRow {
  std::string system;
  double accuracy_pct, precision_pct, recall_pct, f1, fpr_pct;
};

inline std::vector<BaselineRow> published_baselines() {
  return {{"Snort", 71.2, 89.0, 71.2, 0.79, 8.7},
          {"Suricata", 68.5, 86.0, 68.5, 0.76, 11.2},
          {"ModSec", 62.3, 80.0, 62.3, 0.70, 15.6}};
}

struct EvaluationReport {
  ConfusionMatrix matrix;
  MetricsReport metrics;
  std::optional<BootstrapResult> cis;
  std::map<std::string, CategoryRate> per_category;
  std::size_t skipped_events = 0;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
  std::vector<std::string> notes;
};

struct EvaluationOptions {
  bool bootstrap = true;
  std::size_t n_resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 42;
};

inline EvaluationReport evaluate(std::span<const int> labels, std::span<const int> predictions,
                                 std::span<const std::string> categories,
                                 const EvaluationOptions& opt = {}) {
  EvaluationReport r;
  r.matrix = confusion(labels, predictions);
  r.metrics = metrics(r.matrix);
  if (!categories.empty()) r.per_category = per_category(labels, predictions, categories);
  if (opt.bootstrap) {
    const std::size_t pos = count_positive(labels);
    if (pos > 0 && pos < labels.size()) {
      r.cis = bootstrap_ci(labels, predictions, opt.n_resamples, opt.level, opt.seed);
    } else {
      r.notes.push_back("bootstrap skipped: evaluation sample holds a single class");
    }
  }
  r.seeds["bootstrap"] = opt.seed;
  return r;
}

// Percent with two decimals; F1 with three.
inline std::string format_pct(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", *v * 100.0);
  return buf;
}

inline std::string format_f1(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

inline nlohmann::json opt_json(std::optional<double> v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json report_to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["matrix"] = {{"tn", r.matrix.tn}, {"fp", r.matrix.fp}, {"fn", r.matrix.fn}, {"tp", r.matrix.tp},
                 {"total", r.matrix.total()}};
  j["metrics"] = {{"accuracy", r.metrics.accuracy}, {"precision", opt_json(r.metrics.precision)},
                  {"recall", opt_json(r.metrics.recall)}, {"f1", opt_json(r.metrics.f1)},
                  {"fpr", opt_json(r.metrics.fpr)}};
  if (r.cis) {
    nlohmann::json cis = nlohmann::json::object();
    for (const auto& [name, iv] : r.cis->intervals) cis[name] = {{"lo", iv.lo}, {"hi", iv.hi}};
    j["cis"] = {{"level", r.cis->level},
                {"resamples", r.cis->requested},
                {"valid_resamples", r.cis->valid},
                {"skipped_resamples", r.cis->skipped},
                {"intervals", cis}};
  } else {
    j["cis"] = nullptr;
  }
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [name, c] : r.per_category) {
    cats[name] = {{"samples", c.samples}, {"detected", c.detected}, {"rate", c.rate()}};
  }
  j["per_category"] = cats;
  j["skipped_events"] = r.skipped_events;
  j["config"] = r.config;
  j["seeds"] = r.seeds;
  j["notes"] = r.notes;
  nlohmann::json base = nlohmann::json::array();
  for (const auto& b : published_baselines()) {
    base.push_back({{"system", b.system}, {"accuracy_pct", b.accuracy_pct},
                    {"precision_pct", b.precision_pct}, {"recall_pct", b.recall_pct},
                    {"f1", b.f1}, {"fpr_pct", b.fpr_pct}, {"status", "published, not reproduced"}});
  }
  j["baselines"] = base;
  return j;
}

/// Plain-text layout: detection metrics with baseline columns, confusion
/// matrix, per-category detection rates.
inline std::string report_to_text(const EvaluationReport& r) {
  std::ostringstream os;
  char line[256];
  const auto base = published_baselines();
  os << "Detection performance (n=" << r.matrix.total() << ")\n";
  std::snprintf(line, sizeof line, "%-12s %12s", "Metric", "Mirage");
  os << line;
  for (const auto& b : base) {
    std::snprintf(line, sizeof line, " %10s*", b.system.c_str());
    os << line;
  }
  os << '\n';
  auto row = [&](const char* name, const std::string& ours, auto pick, bool pct) {
    std::snprintf(line, sizeof line, "%-12s %12s", name, ours.c_str());
    os << line;
    for (const auto& b : base) {
      const double v = pick(b);
      std::snprintf(line, sizeof line, pct ? " %10.1f%%" : " %11.2f", v);
      os << line;
    }
    os << '\n';
  };
  row("Accuracy", format_pct(r.metrics.accuracy), [](const BaselineRow& b) { return b.accuracy_pct; }, true);
  row("Precision", format_pct(r.metrics.precision), [](const BaselineRow& b) { return b.precision_pct; }, true);
  row("Recall", format_pct(r.metrics.recall), [](const BaselineRow& b) { return b.recall_pct; }, true);
  row("F1-Score", format_f1(r.metrics.f1), [](const BaselineRow& b) { return b.f1; }, false);
  row("FPR", format_pct(r.metrics.fpr), [](const BaselineRow& b) { return b.fpr_pct; }, true);
  os << "* published, not reproduced\n";

  if (r.cis) {
    std::snprintf(line, sizeof line, "\n%.0f%% bootstrap intervals (%zu resamples, %zu skipped)\n",
                  r.cis->level * 100.0, r.cis->requested, r.cis->skipped);
    os << line;
    for (const auto& name : metric_names()) {
      const auto it = r.cis->intervals.find(name);
      if (it == r.cis->intervals.end()) continue;
      const bool f1 = name == "f1";
      const std::string lo = f1 ? format_f1(it->second.lo) : format_pct(it->second.lo);
      const std::string hi = f1 ? format_f1(it->second.hi) : format_pct(it->second.hi);
      std::snprintf(line, sizeof line, "  %-10s [%s, %s]\n", name.c_str(), lo.c_str(), hi.c_str());
      os << line;
    }
  }

  os << "\nConfusion matrix\n";
  std::snprintf(line, sizeof line, "%-16s %16s %16s\n", "", "Predicted Normal", "Predicted Attack");
  os << line;
  std::snprintf(line, sizeof line, "%-16s %16zu %16zu\n", "Actual Normal", r.matrix.tn, r.matrix.fp);
  os << line;
  std::snprintf(line, sizeof line, "%-16s %16zu %16zu\n", "Actual Attack", r.matrix.fn, r.matrix.tp);
  os << line;

  if (!r.per_category.empty()) {
    os << "\nDetection rate by attack type\n";
    std::snprintf(line, sizeof line, "%-24s %8s %14s\n", "Attack Type", "Samples", "Detection Rate");
    os << line;
    for (const auto& [name, c] : r.per_category) {
      std::snprintf(line, sizeof line, "%-24s %8zu %14s\n", name.c_str(), c.samples,
                    format_pct(c.rate()).c_str());
      os << line;
    }
  }
  if (r.skipped_events) os << "\nSkipped events: " << r.skipped_events << '\n';
  for (const auto& n : r.notes) os << "Note: " << n << '\n';
  return os.str();
}

}  // namespace mirage

#endif  // MIRAGE_EVALUATION_HPP_
