/*
 * Copyright 2026 The voxscreen Authors.
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

#include "voxscreen/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "voxscreen/error.hpp"
#include "voxscreen/numeric.hpp"

namespace voxscreen {

std::string_view LabelName(Label label) { return label == Label::kPd ? "PD" : "non-PD"; }

std::string_view GenderName(Gender gender) {
  switch (gender) {
    case Gender::kMale:
      return "male";
    case Gender::kFemale:
      return "female";
    case Gender::kUnspecified:
      break;
  }
  return "unspecified";
}

std::string_view EnvironmentName(Environment environment) {
  return environment == Environment::kLab ? "lab" : "home";
}

Label ParseLabel(std::string_view text) {
  if (text == "PD" || text == "1") return Label::kPd;
  if (text == "non-PD" || text == "0") return Label::kNonPd;
  throw Error(ErrorKind::kParseError, "unknown label '" + std::string(text) + "'");
}

Gender ParseGender(std::string_view text) {
  if (text == "male") return Gender::kMale;
  if (text == "female") return Gender::kFemale;
  if (text == "unspecified" || text.empty()) return Gender::kUnspecified;
  throw Error(ErrorKind::kParseError, "unknown gender '" + std::string(text) + "'");
}

Environment ParseEnvironment(std::string_view text) {
  if (text == "home" || text.empty()) return Environment::kHome;
  if (text == "lab") return Environment::kLab;
  throw Error(ErrorKind::kParseError, "unknown environment '" + std::string(text) + "'");
}

void FeatureMatrix::Validate() const {
  if (rows.size() != meta.size()) {
    throw Error(ErrorKind::kSchemaError, "row and metadata counts differ");
  }
  std::unordered_set<std::string> names;
  for (const auto& name : feature_names) {
    if (!names.insert(name).second) throw Error(ErrorKind::kSchemaError, "duplicate feature " + name);
  }
  std::unordered_set<std::string> ids;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != feature_names.size()) {
      throw Error(ErrorKind::kSchemaError, "row " + meta[r].id + " has the wrong width");
    }
    if (!ids.insert(meta[r].id).second) throw Error(ErrorKind::kSchemaError, "duplicate id " + meta[r].id);
  }
}

std::vector<int> FeatureMatrix::Labels() const {
  std::vector<int> labels(meta.size());
  for (std::size_t r = 0; r < meta.size(); ++r) labels[r] = meta[r].label == Label::kPd ? 1 : 0;
  return labels;
}

std::vector<double> FeatureMatrix::Column(std::size_t feature) const {
  std::vector<double> column(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) column[r] = rows[r][feature];
  return column;
}

std::size_t FeatureMatrix::FeatureIndex(std::string_view name) const {
  const auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) {
    throw Error(ErrorKind::kSchemaError, "no feature named " + std::string(name));
  }
  return static_cast<std::size_t>(it - feature_names.begin());
}

FeatureMatrix FeatureMatrix::SelectRows(std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  out.feature_names = feature_names;
  out.rows.reserve(indices.size());
  out.meta.reserve(indices.size());
  for (std::size_t r : indices) {
    out.rows.push_back(rows.at(r));
    out.meta.push_back(meta.at(r));
  }
  return out;
}

FeatureMatrix FeatureMatrix::SelectFeatures(std::span<const std::string> names) const {
  std::vector<std::size_t> columns;
  columns.reserve(names.size());
  for (const auto& name : names) columns.push_back(FeatureIndex(name));
  FeatureMatrix out;
  out.feature_names.assign(names.begin(), names.end());
  out.meta = meta;
  out.rows.reserve(rows.size());
  for (const auto& row : rows) {
    std::vector<double> selected(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) selected[c] = row[columns[c]];
    out.rows.push_back(std::move(selected));
  }
  return out;
}

namespace {

struct NamedValue {
  std::string name;
  double value;
  bool kept;
};

std::vector<NamedValue> CanonicalValues(const ClassicFeatures& c, const NonlinearFeatures& n) {
  std::vector<NamedValue> v = {
      {"MedianPitch", c.pitch.median, true},
      {"MeanPitch", c.pitch.mean, true},
      {"StdDevPitch", c.pitch.stddev, true},
      {"MeanJitter", c.jitter.mean, true},
      {"MedianJitter", c.jitter.median, true},
      {"LocalJitter", c.jitter.local, false},
      {"LocalAbsoluteJitter", c.jitter.local_absolute, true},
      {"RapJitter", c.jitter.rap, false},
      {"Ppq5Jitter", c.jitter.ppq5, false},
      {"DdpJitter", c.jitter.ddp, true},
      {"MeanShimmer", c.shimmer.mean, false},
      {"MedianShimmer", c.shimmer.median, true},
      {"LocalShimmer", c.shimmer.local, false},
      {"LocaldbShimmer", c.shimmer.local_db, false},
      {"Apq3Shimmer", c.shimmer.apq3, false},
      {"Apq5Shimmer", c.shimmer.apq5, false},
      {"Apq11Shimmer", c.shimmer.apq11, true},
      {"DdaShimmer", c.shimmer.dda, true},
  };
  for (std::size_t k = 0; k < kNumMfcc; ++k) {
    v.push_back({"MeanMFCC" + std::to_string(k), c.mfcc.mean[k], true});
  }
  for (std::size_t k = 0; k < kNumMfcc; ++k) {
    v.push_back({"VariationMFCC" + std::to_string(k), c.mfcc.variation[k], true});
  }
  for (std::size_t b = 0; b < kNumBands; ++b) {
    v.push_back({"RelBandPower" + std::to_string(b), c.rel_band_power[b], true});
  }
  v.push_back({"HNR", c.hnr, true});
  v.push_back({"RPDE", n.rpde, true});
  v.push_back({"DFA", n.dfa, true});
  v.push_back({"PPE", n.ppe, true});
  return v;
}

std::vector<std::string> BuildNames(bool all_features) {
  std::vector<std::string> names;
  for (const auto& entry : CanonicalValues({}, {})) {
    if (all_features || entry.kept) names.push_back(entry.name);
  }
  return names;
}

}  // namespace

const std::vector<std::string>& FeatureNames(bool all_features) {
  static const std::vector<std::string> kept = BuildNames(false);
  static const std::vector<std::string> all = BuildNames(true);
  return all_features ? all : kept;
}

std::vector<double> AssembleRow(const ClassicFeatures& classic, const NonlinearFeatures& nonlinear,
                                bool all_features) {
  std::vector<double> row;
  for (const auto& entry : CanonicalValues(classic, nonlinear)) {
    if (all_features || entry.kept) row.push_back(entry.value);
  }
  return row;
}

double PairwiseCorrelation(std::span<const double> a, std::span<const double> b) {
  double sa = 0.0, sb = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (IsMissing(a[i]) || IsMissing(b[i])) continue;
    sa += a[i];
    sb += b[i];
    ++n;
  }
  if (n < 2) return 0.0;
  const double ma = sa / n, mb = sb / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (IsMissing(a[i]) || IsMissing(b[i])) continue;
    const double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

PruneResult PruneCorrelated(const FeatureMatrix& matrix, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "pruning threshold must lie in (0, 1]");
  }
  if (matrix.size() < 2) throw Error(ErrorKind::kInvalidArgument, "pruning needs at least two rows");
  const std::size_t p = matrix.num_features();
  std::vector<std::vector<double>> columns(p);
  for (std::size_t f = 0; f < p; ++f) columns[f] = matrix.Column(f);
  std::vector<bool> present(p, true);
  for (std::size_t i = 0; i < p; ++i) {
    if (!present[i]) continue;
    for (std::size_t j = i + 1; j < p; ++j) {
      if (present[j] && std::abs(PairwiseCorrelation(columns[i], columns[j])) > threshold) {
        present[j] = false;
      }
    }
  }
  PruneResult result;
  std::vector<std::string> kept;
  for (std::size_t f = 0; f < p; ++f) {
    (present[f] ? kept : result.dropped).push_back(matrix.feature_names[f]);
  }
  result.matrix = matrix.SelectFeatures(kept);
  return result;
}

Preprocessor Preprocessor::Fit(std::span<const std::vector<double>> rows, std::size_t num_features) {
  Preprocessor pre;
  pre.median.assign(num_features, 0.0);
  pre.mean.assign(num_features, 0.0);
  pre.scale.assign(num_features, 1.0);
  std::vector<double> present;
  for (std::size_t f = 0; f < num_features; ++f) {
    present.clear();
    for (const auto& row : rows) {
      if (!IsMissing(row[f])) present.push_back(row[f]);
    }
    if (!present.empty()) pre.median[f] = Median(present);
    std::vector<double> imputed(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      imputed[r] = IsMissing(rows[r][f]) ? pre.median[f] : rows[r][f];
    }
    if (imputed.empty()) continue;
    pre.mean[f] = Mean(imputed);
    const double sd = PopulationStdDev(imputed);
    pre.scale[f] = sd > 0.0 ? sd : 1.0;
  }
  return pre;
}

std::vector<double> Preprocessor::Impute(std::span<const double> row) const {
  if (row.size() != median.size()) throw Error(ErrorKind::kSchemaError, "row width does not match preprocessor");
  std::vector<double> out(row.begin(), row.end());
  for (std::size_t f = 0; f < out.size(); ++f) {
    if (IsMissing(out[f])) out[f] = median[f];
  }
  return out;
}

std::vector<double> Preprocessor::Transform(std::span<const double> row) const {
  auto out = Impute(row);
  for (std::size_t f = 0; f < out.size(); ++f) out[f] = (out[f] - mean[f]) / scale[f];
  return out;
}

FeatureMatrix Preprocessor::Impute(const FeatureMatrix& matrix) const {
  FeatureMatrix out = matrix;
  for (auto& row : out.rows) row = Impute(row);
  return out;
}

FeatureMatrix Preprocessor::Transform(const FeatureMatrix& matrix) const {
  FeatureMatrix out = matrix;
  for (auto& row : out.rows) row = Transform(row);
  return out;
}

FeatureMatrix Smote(const FeatureMatrix& matrix, const SmoteConfig& config) {
  if (config.k == 0) throw Error(ErrorKind::kInvalidArgument, "SMOTE needs k >= 1");
  std::vector<std::size_t> by_class[2];
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    by_class[matrix.meta[r].label == Label::kPd ? 1 : 0].push_back(r);
  }
  if (by_class[0].size() == by_class[1].size()) return matrix;
  const auto& minority = by_class[0].size() < by_class[1].size() ? by_class[0] : by_class[1];
  const std::size_t majority_count = std::max(by_class[0].size(), by_class[1].size());
  if (minority.size() < 2) {
    throw Error(ErrorKind::kCannotOversample, "minority class has fewer than two rows");
  }
  const std::size_t k = std::min(config.k, minority.size() - 1);

  const auto pre = Preprocessor::Fit(matrix.rows, matrix.num_features());
  std::vector<std::vector<double>> imputed, scaled;
  for (std::size_t r : minority) {
    imputed.push_back(pre.Impute(matrix.rows[r]));
    scaled.push_back(pre.Transform(matrix.rows[r]));
  }

  // Neighbour lists ordered by distance, ties by position.
  const std::size_t m = minority.size();
  std::vector<std::vector<std::size_t>> neighbours(m);
  for (std::size_t a = 0; a < m; ++a) {
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      double d = 0.0;
      for (std::size_t f = 0; f < scaled[a].size(); ++f) {
        const double diff = scaled[a][f] - scaled[b][f];
        d += diff * diff;
      }
      dist.emplace_back(d, b);
    }
    std::sort(dist.begin(), dist.end());
    for (std::size_t i = 0; i < k; ++i) neighbours[a].push_back(dist[i].second);
  }

  FeatureMatrix out = matrix;
  Rng rng(config.seed);
  const std::size_t needed = majority_count - m;
  for (std::size_t g = 0; g < needed; ++g) {
    const std::size_t base = g % m;
    const std::size_t nn = neighbours[base][rng.Index(k)];
    const double u = rng.Uniform();
    std::vector<double> row(imputed[base].size());
    for (std::size_t f = 0; f < row.size(); ++f) {
      row[f] = imputed[base][f] + u * (imputed[nn][f] - imputed[base][f]);
    }
    RecordMeta meta = matrix.meta[minority[base]];
    meta.id += "#smote" + std::to_string(g);
    meta.synthetic = true;
    out.rows.push_back(std::move(row));
    out.meta.push_back(std::move(meta));
  }
  return out;
}

std::string FormatDouble(double value) {
  if (IsMissing(value)) return "";
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string CsvEscape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::vector<std::string>> ParseCsvRecords(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw Error(ErrorKind::kParseError, "unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  // Drop blank lines.
  std::erase_if(records, [](const auto& r) { return r.size() == 1 && r[0].empty(); });
  return records;
}

std::string WriteCsv(const FeatureMatrix& matrix) {
  matrix.Validate();
  std::string out;
  for (std::size_t c = 0; c < std::size(kMetaColumns); ++c) {
    if (c > 0) out += ',';
    out += kMetaColumns[c];
  }
  for (const auto& name : matrix.feature_names) {
    out += ',';
    out += CsvEscape(name);
  }
  out += '\n';
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    const auto& meta = matrix.meta[r];
    out += CsvEscape(meta.id);
    out += ',';
    out += LabelName(meta.label);
    out += ',';
    out += GenderName(meta.gender);
    out += ',';
    out += FormatDouble(meta.age);
    out += ',';
    out += EnvironmentName(meta.environment);
    out += ',';
    out += CsvEscape(meta.country);
    for (double v : matrix.rows[r]) {
      out += ',';
      out += FormatDouble(v);
    }
    out += '\n';
  }
  return out;
}

namespace {

double ParseCell(const std::string& cell, const std::string& column, const std::string& id) {
  if (cell.empty()) return kMissing;
  std::string_view text = cell;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::kParseError, "non-numeric value '" + cell + "' in column " + column + " of row " + id);
  }
  if (std::isinf(value)) {
    throw Error(ErrorKind::kParseError, "infinite value in column " + column + " of row " + id);
  }
  return std::isnan(value) ? kMissing : value;
}

}  // namespace

FeatureMatrix ParseCsv(std::string_view text) {
  const auto records = ParseCsvRecords(text);
  if (records.empty()) throw Error(ErrorKind::kSchemaError, "missing header");
  const auto& header = records.front();
  const std::size_t meta_count = std::size(kMetaColumns);
  if (header.size() < meta_count) throw Error(ErrorKind::kSchemaError, "header lacks metadata columns");
  for (std::size_t c = 0; c < meta_count; ++c) {
    if (header[c] != kMetaColumns[c]) {
      throw Error(ErrorKind::kSchemaError, "expected column '" + std::string(kMetaColumns[c]) + "' at position " +
                                               std::to_string(c + 1) + ", found '" + header[c] + "'");
    }
  }
  FeatureMatrix matrix;
  matrix.feature_names.assign(header.begin() + meta_count, header.end());
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& record = records[r];
    if (record.size() != header.size()) {
      throw Error(ErrorKind::kSchemaError, "record " + std::to_string(r) + " has " + std::to_string(record.size()) +
                                               " fields, header has " + std::to_string(header.size()));
    }
    RecordMeta meta;
    meta.id = record[0];
    if (meta.id.empty()) throw Error(ErrorKind::kSchemaError, "record " + std::to_string(r) + " has no id");
    meta.label = ParseLabel(record[1]);
    meta.gender = ParseGender(record[2]);
    meta.age = ParseCell(record[3], "age", meta.id);
    if (!IsMissing(meta.age) && meta.age < 0.0) {
      throw Error(ErrorKind::kParseError, "negative age in row " + meta.id);
    }
    meta.environment = ParseEnvironment(record[4]);
    meta.country = record[5];
    std::vector<double> row(matrix.feature_names.size());
    for (std::size_t f = 0; f < row.size(); ++f) {
      row[f] = ParseCell(record[meta_count + f], matrix.feature_names[f], meta.id);
    }
    matrix.rows.push_back(std::move(row));
    matrix.meta.push_back(std::move(meta));
  }
  matrix.Validate();
  return matrix;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::kIoError, "write failed for " + path.string());
}

void SaveCsv(const FeatureMatrix& matrix, const std::filesystem::path& path) { WriteTextFile(path, WriteCsv(matrix)); }

FeatureMatrix LoadCsv(const std::filesystem::path& path) { return ParseCsv(ReadTextFile(path)); }

}  // namespace voxscreen
