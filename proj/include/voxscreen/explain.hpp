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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voxscreen/eval.hpp"
#include "voxscreen/learn.hpp"

namespace voxscreen {

// Attribution over the model margin: log-odds for boosted models, mean leaf
// fraction for forests. base_value + sum(phi) equals the margin.
struct ShapAttribution {
  std::string id;
  double base_value = 0.0;
  std::vector<double> phi;
};

// Cover-weighted mean margin over the training distribution.
double ExpectedMargin(const TreeEnsemble& model);

// Path-dependent TreeSHAP over a transformed row. Throws ModelUnsupported
// when covers are missing or zero.
ShapAttribution TreeShap(const TreeEnsemble& model, std::span<const double> x);

// Exact Shapley values by enumerating all coalitions, with the same
// cover-weighted conditional expectations. Throws TooLarge above 15 features.
ShapAttribution BruteForceShap(const TreeEnsemble& model, std::span<const double> x);

struct ImportanceEntry {
  std::string feature;
  double mean_abs_phi = 0.0;
};

// Mean |phi| per feature, descending, ties broken by name.
std::vector<ImportanceEntry> GlobalImportance(std::span<const ShapAttribution> attributions,
                                              std::span<const std::string> feature_names);

// Attributes every row of the matrix under a model that scores raw rows.
std::vector<ShapAttribution> ExplainMatrix(const TreeEnsemble& model, const FeatureMatrix& matrix);

struct CurvePoint {
  std::size_t k = 0;
  std::optional<double> auc;
  double accuracy = 0.0;
  // Centred three-point moving average of AUC; two points at the ends.
  std::optional<double> auc_ma3;
};

// LOOCV on the top-k ranked features for k = 1..min(max_k, ranking size).
// Selected columns keep their order in the matrix.
std::vector<CurvePoint> ShapValidationCurve(const FeatureMatrix& matrix, std::span<const ImportanceEntry> ranking,
                                            const EvalOptions& options, std::size_t max_k = 20);

std::string AttributionsCsv(std::span<const ShapAttribution> attributions, std::span<const std::string> feature_names);
std::string ImportanceJson(std::span<const ImportanceEntry> ranking, const std::string& config_fingerprint,
                           std::uint64_t seed);
std::string CurveJson(std::span<const CurvePoint> curve, const std::string& config_fingerprint, std::uint64_t seed);
std::string CurveTsv(std::span<const CurvePoint> curve);

}  // namespace voxscreen
