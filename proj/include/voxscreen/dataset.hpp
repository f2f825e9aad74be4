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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voxscreen/features.hpp"
#include "voxscreen/nonlinear.hpp"

namespace voxscreen {

enum class Label { kNonPd = 0, kPd = 1 };
enum class Gender { kMale, kFemale, kUnspecified };
enum class Environment { kHome, kLab };

std::string_view LabelName(Label label);
std::string_view GenderName(Gender gender);
std::string_view EnvironmentName(Environment environment);
Label ParseLabel(std::string_view text);
Gender ParseGender(std::string_view text);
Environment ParseEnvironment(std::string_view text);

struct RecordMeta {
  std::string id;
  Label label = Label::kNonPd;
  Gender gender = Gender::kUnspecified;
  // Years; kMissing when unknown.
  double age = 0.0;
  Environment environment = Environment::kHome;
  std::string country;
  // Set on rows produced by oversampling; never persisted.
  bool synthetic = false;

  bool operator==(const RecordMeta&) const = default;
};

struct FeatureMatrix {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;
  std::vector<RecordMeta> meta;

  std::size_t size() const { return rows.size(); }
  std::size_t num_features() const { return feature_names.size(); }

  // Throws SchemaError on ragged rows, duplicate names or duplicate ids.
  void Validate() const;

  std::vector<int> Labels() const;
  std::vector<double> Column(std::size_t feature) const;
  std::size_t FeatureIndex(std::string_view name) const;

  FeatureMatrix SelectRows(std::span<const std::size_t> indices) const;
  // Keeps the named features in the given order.
  FeatureMatrix SelectFeatures(std::span<const std::string> names) const;
};

// Canonical feature order. The default list is the reduced set used for
// modelling; all_features adds the correlated perturbation variants.
const std::vector<std::string>& FeatureNames(bool all_features = false);

std::vector<double> AssembleRow(const ClassicFeatures& classic, const NonlinearFeatures& nonlinear,
                                bool all_features = false);

// Pearson correlation over rows where both values are present. Zero when
// fewer than two such rows exist or either column is constant on them.
double PairwiseCorrelation(std::span<const double> a, std::span<const double> b);

struct PruneResult {
  FeatureMatrix matrix;
  std::vector<std::string> dropped;
};

// Visits pairs (i, j), i < j, in column order and drops j whenever both are
// still present and |r| exceeds the threshold.
PruneResult PruneCorrelated(const FeatureMatrix& matrix, double threshold = 0.9);

// Per-column medians, means and scales learned from one set of rows.
struct Preprocessor {
  std::vector<double> median;
  std::vector<double> mean;
  std::vector<double> scale;

  bool empty() const { return median.empty(); }
  // Medians ignore missing cells; an all-missing column imputes to 0.
  // Means and population scales are taken after imputation; a zero scale
  // becomes 1.
  static Preprocessor Fit(std::span<const std::vector<double>> rows, std::size_t num_features);

  std::vector<double> Impute(std::span<const double> row) const;
  std::vector<double> Transform(std::span<const double> row) const;
  FeatureMatrix Impute(const FeatureMatrix& matrix) const;
  FeatureMatrix Transform(const FeatureMatrix& matrix) const;
};

struct SmoteConfig {
  // Clamped to the minority count minus one.
  std::size_t k = 5;
  std::uint64_t seed = 42;
};

// Appends interpolated minority rows until both classes have equal counts.
// Neighbours are found in the imputed, standardized space; new rows are
// interpolated between imputed original rows.
FeatureMatrix Smote(const FeatureMatrix& matrix, const SmoteConfig& config = {});

inline constexpr std::string_view kMetaColumns[] = {"id", "label", "gender", "age", "environment", "country"};

std::string FormatDouble(double value);
std::string WriteCsv(const FeatureMatrix& matrix);
FeatureMatrix ParseCsv(std::string_view text);
void SaveCsv(const FeatureMatrix& matrix, const std::filesystem::path& path);
FeatureMatrix LoadCsv(const std::filesystem::path& path);

// RFC 4180 records; quoted fields may hold commas, quotes and newlines.
std::vector<std::vector<std::string>> ParseCsvRecords(std::string_view text);
std::string CsvEscape(std::string_view field);

std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, std::string_view text);

}  // namespace voxscreen
