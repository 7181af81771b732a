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

#include <gtest/gtest.h>

#include "mirage/evaluation.hpp"

namespace mirage {
namespace {

// Labels and predictions realising a given confusion matrix.
std::pair<Labels, Labels> realise(std::size_t tn, std::size_t fp, std::size_t fn, std::size_t tp) {
  Labels y, p;
  auto add = [&](std::size_t k, int yl, int pl) {
    for (std::size_t i = 0; i < k; ++i) {
      y.push_back(yl);
      p.push_back(pl);
    }
  };
  add(tn, 0, 0);
  add(fp, 0, 1);
  add(fn, 1, 0);
  add(tp, 1, 1);
  return {y, p};
}

TEST(Confusion, Counts) {
  const Labels y{0, 0, 1, 1, 1}, p{0, 1, 0, 1, 1};
  const auto m = confusion(y, p);
  EXPECT_EQ(m.tn, 1u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.fn, 1u);
  EXPECT_EQ(m.tp, 2u);
  EXPECT_EQ(m.total(), 5u);
  EXPECT_THROW(confusion(Labels{0, 1}, Labels{0}), UsageError);
  EXPECT_THROW(confusion(Labels{0, 2}, Labels{0, 1}), UsageError);
}

TEST(Metrics, HeadlineConfusionCounts) {
  const ConfusionMatrix m{40164, 51, 8, 9777};
  const auto r = metrics(m);
  EXPECT_EQ(format_pct(r.accuracy), "99.88%");
  EXPECT_EQ(format_pct(r.precision), "99.48%");
  EXPECT_EQ(format_pct(r.recall), "99.92%");
  EXPECT_EQ(format_f1(r.f1), "0.997");
  EXPECT_EQ(format_pct(r.fpr), "0.13%");
  EXPECT_NEAR(r.accuracy, 49941.0 / 50000.0, 1e-15);
  EXPECT_NEAR(*r.precision, 9777.0 / 9828.0, 1e-15);
  EXPECT_NEAR(*r.recall, 9777.0 / 9785.0, 1e-15);
  EXPECT_NEAR(*r.f1, 2.0 * 9777 / (2.0 * 9777 + 51 + 8), 1e-12);
  EXPECT_NEAR(*r.fpr, 51.0 / 40215.0, 1e-15);
}

TEST(Metrics, DegenerateDenominators) {
  auto r = metrics({10, 0, 0, 0});  // no positives at all
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_FALSE(r.precision);
  EXPECT_FALSE(r.recall);
  EXPECT_FALSE(r.f1);
  EXPECT_EQ(r.fpr, 0.0);
  r = metrics({0, 0, 5, 0});  // positives, none predicted
  EXPECT_FALSE(r.precision);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_FALSE(r.fpr);
  r = metrics({0, 5, 5, 0});
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_EQ(format_pct(std::nullopt), "n/a");
  EXPECT_THROW(metrics({}), UsageError);
}

TEST(Metrics, InvariantsOnRandomMatrices) {
  Rng rng(5);
  for (int trial = 0; trial < 5000; ++trial) {
    const ConfusionMatrix m{1 + rng.index(1000), 1 + rng.index(1000), 1 + rng.index(1000),
                            1 + rng.index(1000)};
    const auto r = metrics(m);
    for (const auto& name : metric_names()) {
      const auto v = metric_value(r, name);
      ASSERT_TRUE(v);
      ASSERT_GE(*v, 0.0);
      ASSERT_LE(*v, 1.0);
    }
    // F1 is the harmonic mean: between min and max of precision and recall.
    ASSERT_LE(*r.f1, std::max(*r.precision, *r.recall) + 1e-15);
    ASSERT_GE(*r.f1, std::min(*r.precision, *r.recall) - 1e-15);
    ASSERT_NEAR(*r.f1, 2.0 * m.tp / (2.0 * m.tp + m.fp + m.fn), 1e-12);
    // Swapping the class roles maps recall to specificity.
    const auto s = metrics({m.tp, m.fn, m.fp, m.tn});
    ASSERT_NEAR(*s.recall, 1.0 - *r.fpr, 1e-12);
    ASSERT_DOUBLE_EQ(s.accuracy, r.accuracy);
  }
  EXPECT_FALSE(metric_value(metrics({1, 1, 1, 1}), "auc"));
}

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile_sorted({7}, 0.3), 7.0);
}

// Balanced labels with roughly 90% correct predictions, errors spread evenly.
std::pair<Labels, Labels> noisy(std::size_t n) {
  Labels y(n), p(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % 2);
    p[i] = i % 10 == 3 || i % 10 == 4 ? 1 - y[i] : y[i];
  }
  return {y, p};
}

TEST(Bootstrap, DeterministicAndContainsPointEstimate) {
  const auto [y, p] = noisy(1000);
  const auto a = bootstrap_ci(y, p, 1000, 0.95, 42);
  const auto b = bootstrap_ci(y, p, 1000, 0.95, 42);
  const auto c = bootstrap_ci(y, p, 1000, 0.95, 43);
  ASSERT_EQ(a.valid, 1000u);
  EXPECT_EQ(a.skipped, 0u);
  const auto point = metrics(confusion(y, p));
  for (const auto& name : metric_names()) {
    ASSERT_TRUE(a.intervals.count(name)) << name;
    EXPECT_EQ(a.intervals.at(name).lo, b.intervals.at(name).lo);
    EXPECT_EQ(a.intervals.at(name).hi, b.intervals.at(name).hi);
    EXPECT_TRUE(a.intervals.at(name).contains(*metric_value(point, name))) << name;
  }
  EXPECT_NE(a.intervals.at("accuracy").lo, c.intervals.at("accuracy").lo);
}

TEST(Bootstrap, WidthShrinksWithSqrtN) {
  const auto [y1, p1] = noisy(1000);
  const auto [y4, p4] = noisy(4000);
  const auto a = bootstrap_ci(y1, p1, 1000, 0.95, 42);
  const auto b = bootstrap_ci(y4, p4, 1000, 0.95, 42);
  for (const auto& name : metric_names()) {
    const double ratio = a.intervals.at(name).width() / b.intervals.at(name).width();
    EXPECT_GT(ratio, 2.0 * 0.7) << name;
    EXPECT_LT(ratio, 2.0 * 1.3) << name;
  }
}

TEST(Bootstrap, SkipsSingleClassResamples) {
  // One positive among 20: about 36% of resamples miss it.
  Labels y(20, 0), p(20, 0);
  y[0] = p[0] = 1;
  const auto r = bootstrap_ci(y, p, 200, 0.95, 1, 50);
  EXPECT_GT(r.skipped, 0u);
  EXPECT_EQ(r.valid + r.skipped, 200u);
  EXPECT_THROW(bootstrap_ci(y, p, 200, 0.95, 1, 190), DataError);
  EXPECT_THROW(bootstrap_ci(Labels{0, 0}, Labels{0, 0}, 10), DataError);
}

TEST(Welch, IdenticalSamples) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const auto r = welch_t_test(a, a);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_DOUBLE_EQ(r.p, 1.0);
}

TEST(Welch, MatchesReferenceValues) {
  // Reference values from scipy.stats.ttest_ind(..., equal_var=False).
  const std::vector<double> a{10.1, 9.8, 10.3, 10.0, 9.9}, b{12, 8, 15, 5, 14, 9, 11, 13};
  const auto r = welch_t_test(a, b);
  EXPECT_NEAR(r.t, -0.7185426684817015, 1e-12);
  EXPECT_NEAR(r.df, 7.073405894995688, 1e-10);
  EXPECT_NEAR(r.p, 0.49546706354433545, 1e-10);
  EXPECT_LT(r.df, static_cast<double>(a.size() + b.size() - 2));

  const std::vector<double> c{1, 2, 3, 4, 5, 6}, d{3.5, 4.5, 5.5, 6.5, 7.5, 8.5, 9.5, 10.5};
  const auto s = welch_t_test(c, d);
  EXPECT_NEAR(s.t, -3.0310889132455356, 1e-12);
  EXPECT_NEAR(s.df, 11.978609625668451, 1e-10);
  EXPECT_NEAR(s.p, 0.010464347948125209, 1e-10);
}

TEST(Welch, ShiftedSamplesAreSignificant) {
  Rng rng(9);
  std::vector<double> a, b;
  for (int i = 0; i < 200; ++i) {
    a.push_back(rng.normal(0.0, 1.0));
    b.push_back(rng.normal(1.0, 2.0));
  }
  const auto r = welch_t_test(a, b);
  EXPECT_LT(r.p, 0.01);
  EXPECT_LT(r.t, 0.0);
  const auto swapped = welch_t_test(b, a);
  EXPECT_DOUBLE_EQ(swapped.t, -r.t);
  EXPECT_DOUBLE_EQ(swapped.p, r.p);
}

TEST(Welch, Errors) {
  const std::vector<double> one{1.0}, two{1.0, 2.0}, flat{3.0, 3.0};
  EXPECT_THROW(welch_t_test(one, two), UsageError);
  EXPECT_THROW(welch_t_test(flat, flat), DataError);
}

TEST(PerCategory, CountsAttacksOnly) {
  const Labels y{1, 1, 1, 0, 1}, p{1, 0, 1, 1, 1};
  const std::vector<std::string> cats{"DoS", "DoS", "PortScan", "BENIGN", "DoS"};
  const auto r = per_category(y, p, cats);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r.at("DoS").samples, 3u);
  EXPECT_EQ(r.at("DoS").detected, 2u);
  EXPECT_DOUBLE_EQ(r.at("PortScan").rate(), 1.0);
  EXPECT_FALSE(r.count("BENIGN"));
  EXPECT_THROW(per_category(y, p, std::vector<std::string>{"x"}), UsageError);
}

TEST(Report, JsonLayout) {
  const auto [y, p] = realise(40164, 51, 8, 9777);
  std::vector<std::string> cats(y.size(), "BENIGN");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i]) cats[i] = i % 2 ? "DoS" : "PortScan";
  }
  EvaluationOptions opt;
  opt.n_resamples = 200;
  const auto r = evaluate(y, p, cats, opt);
  const auto j = report_to_json(r);
  EXPECT_EQ(j["matrix"]["tp"], 9777);
  EXPECT_EQ(j["matrix"]["total"], 50000);
  EXPECT_EQ(j["cis"]["resamples"], 200);
  EXPECT_EQ(j["cis"]["level"], 0.95);
  EXPECT_TRUE(j["cis"]["intervals"].contains("f1"));
  EXPECT_EQ(j["per_category"]["DoS"]["samples"].get<int>() + j["per_category"]["PortScan"]["samples"].get<int>(),
            9785);
  ASSERT_EQ(j["baselines"].size(), 3u);
  EXPECT_EQ(j["baselines"][0]["system"], "Snort");
  EXPECT_EQ(j["baselines"][0]["accuracy_pct"], 71.2);
  EXPECT_EQ(j["baselines"][2]["fpr_pct"], 15.6);
  for (const auto& b : j["baselines"]) EXPECT_EQ(b["status"], "published, not reproduced");
  EXPECT_EQ(j["seeds"]["bootstrap"], 42);
}

TEST(Report, TextLayout) {
  const auto [y, p] = realise(40164, 51, 8, 9777);
  EvaluationOptions opt;
  opt.bootstrap = false;
  auto r = evaluate(y, p, {}, opt);
  r.skipped_events = 3;
  r.notes.push_back("hello");
  const auto text = report_to_text(r);
  for (const char* needle : {"99.88%", "99.48%", "99.92%", "0.997", "0.13%", "71.2%", "0.79", "15.6%",
                             "published, not reproduced", "40164", "9777", "Skipped events: 3",
                             "Note: hello"}) {
    EXPECT_NE(text.find(needle), std::string::npos) << needle;
  }
  EXPECT_EQ(text.find("bootstrap intervals"), std::string::npos);
}

TEST(Evaluate, SingleClassSkipsBootstrapWithNote) {
  const Labels y(10, 0), p(10, 0);
  const auto r = evaluate(y, p, {});
  EXPECT_FALSE(r.cis);
  ASSERT_EQ(r.notes.size(), 1u);
  EXPECT_TRUE(report_to_json(r)["cis"].is_null());
}

}  // namespace
}  // namespace mirage
