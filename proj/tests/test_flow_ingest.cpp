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

#include <fstream>
#include <limits>
#include <sstream>

#include "fixtures.hpp"
#include "mirage/default_schema.hpp"
#include "mirage/flow_ingest.hpp"

namespace mirage {
namespace {

const std::vector<std::string> kSmallSchema{"a", "b", "c"};

Dataset parse(const std::string& csv, const std::vector<std::string>& schema = kSmallSchema) {
  std::istringstream in(csv);
  return parse_flow_csv(in, schema);
}

TEST(ParseFlowCsv, MapsLabels) {
  const auto d = parse("a,b,c,Label\n1,2,3,BENIGN\n4,5,6,DDoS\n7,8,9,BENIGN\n");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.labels(), (Labels{0, 1, 0}));
  EXPECT_EQ(d.records[0].category, "BENIGN");
  EXPECT_EQ(d.records[1].category, "DDoS");
  EXPECT_EQ(d.records[2].category, "BENIGN");
  EXPECT_EQ(d.records[1].features, (std::vector<double>{4, 5, 6}));
}

TEST(ParseFlowCsv, BenignMatchIsTrimmedAndCaseInsensitive) {
  const auto d = parse("a,b,c,Label\n1,2,3, benign \n1,2,3,Benign\n1,2,3,Web Attack - XSS\n");
  EXPECT_EQ(d.labels(), (Labels{0, 0, 1}));
  EXPECT_EQ(d.records[2].category, "Web Attack - XSS");
}

TEST(ParseFlowCsv, HeaderNamesAreTrimmed) {
  // CICIDS2017 headers carry leading spaces.
  const auto d = parse(" a, b, c, Label\n1,2,3,BENIGN\n");
  EXPECT_EQ(d.size(), 1u);
}

TEST(ParseFlowCsv, ColumnsSelectedByNameInSchemaOrder) {
  const auto d = parse("c,extra,a,b,Label\n3,99,1,2,PortScan\n");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.records[0].features, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(d.provenance.ignored_columns, (std::vector<std::string>{"extra"}));
}

TEST(ParseFlowCsv, MissingLabelColumn) {
  EXPECT_THROW(parse("a,b,c\n1,2,3\n"), DataError);
}

TEST(ParseFlowCsv, HeaderWithTooFewFeaturesIsSchemaMismatch) {
  std::ostringstream csv;
  const auto schema = default_schema();
  for (std::size_t i = 0; i + 1 < schema.size(); ++i) csv << schema[i] << ',';
  csv << "Label\n";
  for (std::size_t i = 0; i + 1 < schema.size(); ++i) csv << "0,";
  csv << "BENIGN\n";
  try {
    parse(csv.str(), schema);
    FAIL() << "expected schema mismatch";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("schema mismatch"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("76 of 77"), std::string::npos);
  }
}

TEST(ParseFlowCsv, MalformedRowsSkippedAndCounted) {
  std::string csv = "a,b,c,Label\n";
  for (int i = 0; i < 10; ++i) {
    if (i == 3) {
      csv += "1,2,BENIGN\n";  // short row
    } else if (i == 7) {
      csv += "1,oops,3,BENIGN\n";
    } else {
      csv += std::to_string(i) + ",0,0,BENIGN\n";
    }
  }
  const auto d = parse(csv);
  EXPECT_EQ(d.size(), 8u);
  EXPECT_EQ(d.provenance.rows_read, 10u);
  EXPECT_EQ(d.provenance.rows_dropped, 2u);
  ASSERT_EQ(d.provenance.warnings.size(), 2u);
  EXPECT_NE(d.provenance.warnings[0].find("line 5"), std::string::npos);
  EXPECT_NE(d.provenance.warnings[1].find("line 9"), std::string::npos);
}

TEST(ParseFlowCsv, QuotedFieldsAndInfinity) {
  const auto d = parse("a,b,c,Label\n\"1\",Infinity,NaN,\"Bot, variant\"\r\n");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_TRUE(std::isinf(d.records[0].features[1]));
  EXPECT_TRUE(std::isnan(d.records[0].features[2]));
  EXPECT_EQ(d.records[0].category, "Bot, variant");
}

TEST(ParseFlowCsv, MissingFileIsDataError) {
  EXPECT_THROW(parse_flow_csv(std::string("/nonexistent/flows.csv"), kSmallSchema), DataError);
}

TEST(DefaultSchema, ShipsSeventySevenDistinctNames) {
  const auto s = default_schema();
  EXPECT_EQ(s.size(), 77u);
  EXPECT_EQ(std::set<std::string>(s.begin(), s.end()).size(), 77u);
}

TEST(DefaultSchema, MatchesShippedSchemaFile) {
  EXPECT_EQ(load_schema(std::string(MIRAGE_DATA_DIR) + "/cicids2017_features.txt"), default_schema());
}

Dataset with_infinite_cell() {
  Dataset d;
  d.feature_names = {"Flow Bytes/s", "x"};
  d.records = {{{1.0, 2.0}, 0, "BENIGN"},
               {{std::numeric_limits<double>::infinity(), 3.0}, 1, "DoS"},
               {{4.0, 5.0}, 1, "DoS"}};
  return d;
}

TEST(CleanDataset, DropRowRemovesOffender) {
  const auto c = clean_dataset(with_infinite_cell(), CleaningPolicy::kDropRow);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.records[1].features[0], 4.0);
  EXPECT_EQ(c.provenance.nonfinite_rows_dropped, 1u);
}

TEST(CleanDataset, ImputeZeroKeepsCount) {
  const auto c = clean_dataset(with_infinite_cell(), CleaningPolicy::kImputeZero);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.records[1].features[0], 0.0);
  EXPECT_EQ(c.provenance.cells_imputed, 1u);
}

TEST(CleanDataset, CleanInputUnchanged) {
  Dataset d = with_infinite_cell();
  d.records.erase(d.records.begin() + 1);
  const auto c = clean_dataset(d, CleaningPolicy::kDropRow);
  ASSERT_EQ(c.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(c.records[i].features, d.records[i].features);
  EXPECT_EQ(c.provenance.nonfinite_rows_dropped, 0u);
  EXPECT_EQ(c.provenance.cells_imputed, 0u);
}

TEST(CleanDataset, NoNonFiniteCellsSurvive) {
  Rng rng(3);
  Dataset d;
  d.feature_names = {"a", "b", "c"};
  for (int i = 0; i < 500; ++i) {
    FlowRecord r{{rng.normal(), rng.normal(), rng.normal()}, 0, "BENIGN"};
    if (rng.uniform() < 0.1) r.features[rng.index(3)] = std::nan("");
    if (rng.uniform() < 0.1) r.features[rng.index(3)] = -std::numeric_limits<double>::infinity();
    d.records.push_back(r);
  }
  for (auto policy : {CleaningPolicy::kDropRow, CleaningPolicy::kImputeZero}) {
    for (const auto& r : clean_dataset(d, policy).records) {
      for (double v : r.features) ASSERT_TRUE(std::isfinite(v));
    }
  }
}

TEST(CleaningPolicy, Parse) {
  EXPECT_EQ(parse_cleaning_policy("drop_row"), CleaningPolicy::kDropRow);
  EXPECT_EQ(parse_cleaning_policy("impute_zero"), CleaningPolicy::kImputeZero);
  EXPECT_FALSE(parse_cleaning_policy("zero"));
}

TEST(Standardizer, TwoPointPopulationStd) {
  FeatureMatrix x;
  x.append_row(std::vector<double>{2.0});
  x.append_row(std::vector<double>{4.0});
  const auto s = fit_standardizer(x);
  EXPECT_DOUBLE_EQ(s.means[0], 3.0);
  EXPECT_DOUBLE_EQ(s.std_devs[0], 1.0);
}

TEST(Standardizer, ConstantColumnGetsUnitStd) {
  FeatureMatrix x;
  for (int i = 0; i < 3; ++i) x.append_row(std::vector<double>{5.0});
  const auto s = fit_standardizer(x);
  EXPECT_DOUBLE_EQ(s.means[0], 5.0);
  EXPECT_DOUBLE_EQ(s.std_devs[0], 1.0);
  EXPECT_EQ(s.transform(std::vector<double>{5.0})[0], 0.0);
}

TEST(Standardizer, EmptyInputRejected) {
  EXPECT_THROW(fit_standardizer(FeatureMatrix{}), DataError);
}

TEST(Standardizer, TransformedMomentsAreZeroAndOne) {
  Rng rng(9);
  FeatureMatrix x(100, 4);
  for (std::size_t i = 0; i < 100; ++i) {
    for (std::size_t j = 0; j < 4; ++j) x(i, j) = 1000.0 * static_cast<double>(j) + rng.normal() * (j + 1);
  }
  const auto z = apply_standardizer(fit_standardizer(x), x);
  for (std::size_t j = 0; j < 4; ++j) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < 100; ++i) m += z(i, j);
    m /= 100;
    for (std::size_t i = 0; i < 100; ++i) v += (z(i, j) - m) * (z(i, j) - m);
    EXPECT_LT(std::abs(m), 1e-9);
    EXPECT_NEAR(std::sqrt(v / 100), 1.0, 1e-9);
  }
}

TEST(Standardizer, MeanVectorMapsToZeroAndRoundTrips) {
  Rng rng(4);
  FeatureMatrix x(50, 3);
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.normal(10.0, 3.0);
  }
  const auto s = fit_standardizer(x);
  for (double v : s.transform(s.means)) EXPECT_EQ(v, 0.0);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto z = s.transform(x.row(i));
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(z[j] * s.std_devs[j] + s.means[j], x(i, j), 1e-9);
  }
}

TEST(Standardizer, IdentityLeavesDataUnchanged) {
  Dataset d = with_infinite_cell();
  d.records.erase(d.records.begin() + 1);
  const auto out = apply_standardizer(Standardizer::identity(2), d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(out.records[i].features, d.records[i].features);
    EXPECT_EQ(out.records[i].category, d.records[i].category);
  }
}

TEST(Standardizer, DimensionMismatch) {
  Dataset d = with_infinite_cell();
  EXPECT_THROW(apply_standardizer(Standardizer::identity(3), d), UsageError);
}

Dataset numbered(std::size_t n, double attack_ratio = 0.2) {
  Dataset d;
  d.feature_names = {"id"};
  const auto n_attack = static_cast<std::size_t>(std::llround(attack_ratio * n));
  for (std::size_t i = 0; i < n; ++i) {
    d.records.push_back({{static_cast<double>(i)}, i < n_attack ? 1 : 0, i < n_attack ? "DoS" : "BENIGN"});
  }
  return d;
}

std::multiset<double> ids(const Dataset& d) {
  std::multiset<double> s;
  for (const auto& r : d.records) s.insert(r.features[0]);
  return s;
}

TEST(SplitDataset, SizesAndPartition) {
  const auto d = numbered(10);
  const auto [a, b] = split_dataset(d, 0.7, 1);
  EXPECT_EQ(a.size(), 7u);
  EXPECT_EQ(b.size(), 3u);
  auto all = ids(a);
  const auto rest = ids(b);
  all.insert(rest.begin(), rest.end());
  EXPECT_EQ(all, ids(d));
}

TEST(SplitDataset, DeterministicPerSeed) {
  const auto d = numbered(1000);
  const auto [a1, b1] = split_dataset(d, 0.7, 5);
  const auto [a2, b2] = split_dataset(d, 0.7, 5);
  const auto [a3, b3] = split_dataset(d, 0.7, 6);
  for (std::size_t i = 0; i < a1.size(); ++i) EXPECT_EQ(a1.records[i].features, a2.records[i].features);
  bool differs = false;
  for (std::size_t i = 0; i < a1.size(); ++i) differs |= a1.records[i].features != a3.records[i].features;
  EXPECT_TRUE(differs);
}

TEST(SplitDataset, FractionOutOfRange) {
  EXPECT_THROW(split_dataset(numbered(10), 1.0, 1), UsageError);
  EXPECT_THROW(split_dataset(numbered(10), 0.0, 1), UsageError);
}

TEST(StratifiedSample, ExactAttackCount) {
  const auto s = stratified_sample(numbered(1000, 0.2), 100, 3);
  EXPECT_EQ(s.size(), 100u);
  EXPECT_EQ(s.attack_count(), 20u);
}

TEST(StratifiedSample, HeadlineSampleCount) {
  // 19.57% of 50,000 is 9,785 attacks.
  Dataset d;
  d.feature_names = {"id"};
  const std::size_t total = 100000, attacks = 19570;
  for (std::size_t i = 0; i < total; ++i) d.records.push_back({{0.0}, i < attacks ? 1 : 0, ""});
  const auto s = stratified_sample(d, 50000, 1);
  EXPECT_EQ(s.attack_count(), 9785u);
}

TEST(StratifiedSample, FullSizeIsPermutation) {
  const auto d = numbered(200, 0.3);
  const auto s = stratified_sample(d, 200, 8);
  EXPECT_EQ(ids(s), ids(d));
  EXPECT_EQ(s.attack_count(), d.attack_count());
}

TEST(StratifiedSample, CountsMatchRoundedRatioOnRandomInputs) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t size = 50 + rng.index(500);
    const double ratio = 0.05 + 0.9 * rng.uniform();
    const auto d = numbered(size, ratio);
    const std::size_t n = 1 + rng.index(size);
    const auto s = stratified_sample(d, n, trial);
    const double exact = static_cast<double>(d.attack_count()) / static_cast<double>(size) * n;
    EXPECT_EQ(s.size(), n);
    EXPECT_EQ(s.attack_count(), static_cast<std::size_t>(std::llround(exact)));
  }
}

TEST(StratifiedSample, Errors) {
  EXPECT_THROW(stratified_sample(numbered(10), 11, 1), UsageError);
  EXPECT_THROW(stratified_sample(numbered(10, 0.0), 5, 1), DataError);
}

}  // namespace
}  // namespace mirage
