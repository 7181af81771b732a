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

// Loading, cleaning, standardizing and splitting labeled flow datasets in the
// CICIDS2017 CSV shape.

#ifndef MIRAGE_FLOW_INGEST_HPP_
#define MIRAGE_FLOW_INGEST_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mirage/common.hpp"
#include "mirage/default_schema.hpp"

namespace mirage {

struct FlowRecord {
  std::vector<double> features;
  int label = 0;  // 0 benign, 1 attack
  std::string category;
};

struct Provenance {
  std::string source;
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;  // malformed rows skipped while parsing
  std::size_t nonfinite_rows_dropped = 0;
  std::size_t cells_imputed = 0;
  std::vector<std::string> ignored_columns;
  std::vector<std::string> warnings;
};

struct Dataset {
  std::vector<FlowRecord> records;
  std::vector<std::string> feature_names;
  Provenance provenance;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  std::size_t num_features() const { return feature_names.size(); }

  std::size_t attack_count() const {
    return static_cast<std::size_t>(std::count_if(
        records.begin(), records.end(), [](const FlowRecord& r) { return r.label == 1; }));
  }

  double attack_ratio() const {
    return records.empty() ? 0.0
                           : static_cast<double>(attack_count()) /
                                 static_cast<double>(records.size());
  }

  FeatureMatrix matrix() const {
    FeatureMatrix m(records.size(), num_features());
    for (std::size_t i = 0; i < records.size(); ++i) {
      std::copy(records[i].features.begin(), records[i].features.end(), m.row(i).begin());
    }
    return m;
  }

  Labels labels() const {
    Labels out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.label);
    return out;
  }

  // Same schema and provenance source, records picked by index.
  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.feature_names = feature_names;
    out.provenance.source = provenance.source;
    out.records.reserve(indices.size());
    for (std::size_t i : indices) out.records.push_back(records[i]);
    return out;
  }
};

enum class CleaningPolicy { kDropRow, kImputeZero };

inline std::optional<CleaningPolicy> parse_cleaning_policy(std::string_view s) {
  if (s == "drop_row") return CleaningPolicy::kDropRow;
  if (s == "impute_zero") return CleaningPolicy::kImputeZero;
  return std::nullopt;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline bool is_benign_label(std::string_view raw) { return lower(trim(raw)) == "benign"; }

// Accepts what strtod accepts, including "inf", "Infinity" and "NaN".
inline std::optional<double> parse_double(std::string_view field) {
  const std::string t = trim(field);
  if (t.empty()) return std::nullopt;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return value;
}

/// Reads one RFC-4180 record. Quoted fields may contain separators, doubled
/// quotes and line breaks. Returns false at end of input; `lines` is advanced
/// by the number of physical lines consumed.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields,
                            std::size_t& lines, bool& unterminated) {
  fields.clear();
  unterminated = false;
  std::string line;
  if (!std::getline(in, line)) return false;
  ++lines;
  std::string field;
  bool quoted = false;
  for (;;) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c != '\r' || i + 1 != line.size()) {
        field.push_back(c);
      }
    }
    if (!quoted) break;
    if (!std::getline(in, line)) {
      unterminated = true;
      break;
    }
    ++lines;
    field.push_back('\n');
  }
  fields.push_back(std::move(field));
  return true;
}

}  // namespace detail

/// Parses a labeled flow CSV. Feature columns are selected by (trimmed) header
/// name in schema order; columns outside the schema are ignored and recorded.
/// Malformed rows are skipped with a line-numbered warning.
inline Dataset parse_flow_csv(std::istream& in, const std::vector<std::string>& schema,
                              const std::string& label_column = "Label",
                              const std::string& source_name = "<stream>") {
  std::vector<std::string> header;
  std::size_t line_no = 0;
  bool unterminated = false;
  if (!detail::read_csv_record(in, header, line_no, unterminated)) {
    throw DataError(source_name + ": missing header row");
  }

  std::unordered_map<std::string, std::size_t> column_of;
  for (std::size_t i = 0; i < header.size(); ++i) {
    column_of.emplace(detail::trim(header[i]), i);  // first occurrence wins
  }
  const auto label_it = column_of.find(detail::trim(label_column));
  if (label_it == column_of.end()) {
    throw DataError(source_name + ": missing label column '" + label_column + "'");
  }
  const std::size_t label_idx = label_it->second;

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> missing;
  for (const auto& name : schema) {
    const auto it = column_of.find(detail::trim(name));
    if (it == column_of.end() || it->second == label_idx) {
      missing.push_back(name);
    } else {
      feature_cols.push_back(it->second);
    }
  }
  if (!missing.empty()) {
    throw DataError(source_name + ": schema mismatch: header provides " +
                    std::to_string(feature_cols.size()) + " of " +
                    std::to_string(schema.size()) + " schema features (first missing: '" +
                    missing.front() + "')");
  }

  Dataset d;
  d.feature_names = schema;
  d.provenance.source = source_name;
  {
    std::vector<bool> used(header.size(), false);
    used[label_idx] = true;
    for (auto c : feature_cols) used[c] = true;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (!used[i]) d.provenance.ignored_columns.push_back(detail::trim(header[i]));
    }
  }

  std::vector<std::string> fields;
  for (;;) {
    const std::size_t record_line = line_no + 1;
    if (!detail::read_csv_record(in, fields, line_no, unterminated)) break;
    if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;  // blank line
    ++d.provenance.rows_read;

    auto drop = [&](const std::string& why) {
      ++d.provenance.rows_dropped;
      d.provenance.warnings.push_back("line " + std::to_string(record_line) + ": " + why);
    };
    if (unterminated) {
      drop("unterminated quoted field");
      break;
    }
    if (fields.size() != header.size()) {
      drop("expected " + std::to_string(header.size()) + " fields, found " +
           std::to_string(fields.size()));
      continue;
    }
    const std::string label = detail::trim(fields[label_idx]);
    if (label.empty()) {
      drop("empty label");
      continue;
    }
    FlowRecord rec;
    rec.features.reserve(feature_cols.size());
    bool ok = true;
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const auto v = detail::parse_double(fields[feature_cols[k]]);
      if (!v) {
        drop("unparseable value '" + fields[feature_cols[k]] + "' in column '" + schema[k] +
             "'");
        ok = false;
        break;
      }
      rec.features.push_back(*v);
    }
    if (!ok) continue;
    if (detail::is_benign_label(label)) {
      rec.label = 0;
      rec.category = "BENIGN";
    } else {
      rec.label = 1;
      rec.category = label;
    }
    d.records.push_back(std::move(rec));
  }
  return d;
}

inline Dataset parse_flow_csv(const std::string& path, const std::vector<std::string>& schema,
                              const std::string& label_column = "Label") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return parse_flow_csv(in, schema, label_column, path);
}

/// Schema file: one feature name per line; blank lines and '#' comments ignored.
inline std::vector<std::string> load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file '" + path + "'");
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    auto t = detail::trim(line);
    if (!t.empty() && t.front() != '#') names.push_back(std::move(t));
  }
  if (names.empty()) throw DataError("schema file '" + path + "' is empty");
  return names;
}

inline Dataset clean_dataset(const Dataset& d, CleaningPolicy policy) {
  Dataset out;
  out.feature_names = d.feature_names;
  out.provenance = d.provenance;
  out.records.reserve(d.records.size());
  for (const auto& rec : d.records) {
    const bool finite = std::all_of(rec.features.begin(), rec.features.end(),
                                    [](double v) { return std::isfinite(v); });
    if (finite) {
      out.records.push_back(rec);
      continue;
    }
    if (policy == CleaningPolicy::kDropRow) {
      ++out.provenance.nonfinite_rows_dropped;
      continue;
    }
    FlowRecord fixed = rec;
    for (double& v : fixed.features) {
      if (!std::isfinite(v)) {
        v = 0.0;
        ++out.provenance.cells_imputed;
      }
    }
    out.records.push_back(std::move(fixed));
  }
  return out;
}

/// Per-column z-score transform. Zero-variance columns keep std = 1 so they
/// pass through after centering.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> std_devs;

  std::size_t dimension() const { return means.size(); }

  void transform(std::span<const double> in, std::span<double> out) const {
    if (in.size() != means.size() || out.size() != means.size()) {
      throw UsageError("standardizer expects " + std::to_string(means.size()) +
                       " features, got " + std::to_string(in.size()));
    }
    for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - means[j]) / std_devs[j];
  }

  std::vector<double> transform(std::span<const double> in) const {
    std::vector<double> out(in.size());
    transform(in, out);
    return out;
  }

  static Standardizer identity(std::size_t dim) {
    return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
  }
};

// Population moments, two-pass for accuracy.
inline Standardizer fit_standardizer(const FeatureMatrix& x) {
  if (x.rows() == 0) throw DataError("cannot fit standardizer on an empty dataset");
  const std::size_t n = x.rows(), p = x.cols();
  Standardizer s{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) s.means[j] += x(i, j);
  }
  for (auto& m : s.means) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double d = x(i, j) - s.means[j];
      s.std_devs[j] += d * d;
    }
  }
  for (auto& v : s.std_devs) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 0.0) || !std::isfinite(v)) v = 1.0;
  }
  return s;
}

inline Standardizer fit_standardizer(const Dataset& train) {
  if (train.empty()) throw DataError("cannot fit standardizer on an empty dataset");
  return fit_standardizer(train.matrix());
}

inline Dataset apply_standardizer(const Standardizer& s, const Dataset& d) {
  if (d.num_features() != s.dimension()) {
    throw UsageError("dimension mismatch: dataset has " + std::to_string(d.num_features()) +
                     " features, standardizer " + std::to_string(s.dimension()));
  }
  Dataset out = d;
  for (auto& rec : out.records) s.transform(rec.features, rec.features);
  return out;
}

inline FeatureMatrix apply_standardizer(const Standardizer& s, const FeatureMatrix& x) {
  FeatureMatrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) s.transform(x.row(i), out.row(i));
  return out;
}

/// Seeded shuffle, then the first round(fraction * n) indices form the first part.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw UsageError("split fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(idx);
  const auto cut = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return {std::vector<std::size_t>(idx.begin(), idx.begin() + cut),
          std::vector<std::size_t>(idx.begin() + cut, idx.end())};
}

inline std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double train_fraction,
                                                 std::uint64_t seed) {
  const auto [first, second] = split_indices(d.size(), train_fraction, seed);
  return {d.subset(first), d.subset(second)};
}

/// Class-stratified sample of exactly n records; the attack count is
/// round(n * attack_ratio).
inline Dataset stratified_sample(const Dataset& d, std::size_t n, std::uint64_t seed) {
  if (n > d.size()) {
    throw UsageError("sample size " + std::to_string(n) + " exceeds dataset size " +
                     std::to_string(d.size()));
  }
  std::vector<std::size_t> attacks, benign;
  for (std::size_t i = 0; i < d.size(); ++i) {
    (d.records[i].label == 1 ? attacks : benign).push_back(i);
  }
  if (attacks.empty() || benign.empty()) {
    throw DataError("stratified sampling needs both classes present");
  }
  const double ratio = static_cast<double>(attacks.size()) / static_cast<double>(d.size());
  auto n_attack = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  n_attack = std::min(n_attack, attacks.size());
  const std::size_t n_benign = n - n_attack;
  if (n_benign > benign.size()) throw DataError("not enough benign records to stratify");

  Rng rng(seed);
  rng.shuffle(attacks);
  rng.shuffle(benign);
  std::vector<std::size_t> chosen(attacks.begin(), attacks.begin() + n_attack);
  chosen.insert(chosen.end(), benign.begin(), benign.begin() + n_benign);
  rng.shuffle(chosen);
  Dataset out = d.subset(chosen);
  out.provenance = d.provenance;
  return out;
}

}  // namespace mirage

#endif  // MIRAGE_FLOW_INGEST_HPP_
