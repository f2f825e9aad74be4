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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voxscreen/dataset.hpp"
#include "voxscreen/learn.hpp"
#include "voxscreen/numeric.hpp"

namespace voxscreen {

struct TrainerConfig {
  EnsembleKind kind = EnsembleKind::kBoosted;
  ForestConfig forest;
  BoostConfig boost;
  bool oversample = true;
  std::size_t smote_k = 5;
};

// Stable JSON rendering of the trainer settings; seeds are excluded.
std::string TrainerConfigJson(const TrainerConfig& config);
TrainerConfig TrainerConfigFromJson(std::string_view text);

// Display name used in result tables.
std::string_view TrainerDisplayName(EnsembleKind kind);

// Fits imputation and scaling on the given rows, oversamples the minority,
// trains, and returns a model that scores raw rows.
TreeEnsemble FitModel(const FeatureMatrix& train, const TrainerConfig& config, std::uint64_t seed);

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  bool operator==(const Confusion&) const = default;
};

struct AccuracyResult {
  double accuracy = 0.0;
  Confusion confusion;
};

// Mann-Whitney AUC with ties counted one half. Throws Undefined unless both
// classes are present.
double Auc(std::span<const double> scores, std::span<const int> labels);
// Predicts positive when score >= threshold.
AccuracyResult AccuracyConfusion(std::span<const double> scores, std::span<const int> labels,
                                 double threshold = 0.5);

struct Metrics {
  std::size_t n = 0;
  std::size_t positives = 0;
  // Absent when only one class is present.
  std::optional<double> auc;
  // kMissing when n == 0.
  double accuracy = 0.0;
  Confusion confusion;

  bool defined() const { return auc.has_value(); }
};

Metrics ComputeMetrics(std::span<const double> scores, std::span<const int> labels);

struct StratumMetrics {
  std::string name;
  Metrics metrics;
};

// Accepts stratum names male, female, age50, home, lab and the group
// aliases gender, age and environment.
std::vector<std::string> ExpandStrata(std::string_view spec);
bool InStratum(const RecordMeta& meta, std::string_view stratum);
std::vector<StratumMetrics> StratifiedEval(std::span<const double> scores, std::span<const int> labels,
                                           std::span<const RecordMeta> meta, std::span<const std::string> strata);

struct FoldResult {
  std::size_t index = 0;
  std::string id;
  int label = 0;
  double score = kMissing;
  bool skipped = false;
  std::string reason;
  std::string model_fingerprint;
};

// Trains on every row except held_out and scores that row. The fold seed is
// derived from (seed, held_out). A single-class training set yields a
// skipped fold.
FoldResult RunFold(const FeatureMatrix& matrix, std::size_t held_out, const TrainerConfig& config,
                   std::uint64_t seed);

// Folds run on up to jobs threads and are returned in row order.
std::vector<FoldResult> Loocv(const FeatureMatrix& matrix, const TrainerConfig& config, std::uint64_t seed,
                              std::size_t jobs = 1);

struct SampleScore {
  std::string id;
  int label = 0;
  double score = 0.0;
  std::string model_fingerprint;
};

struct SkippedFold {
  std::string id;
  std::string reason;
};

struct EvalReport {
  std::string name;
  std::vector<SampleScore> scores;
  std::vector<SkippedFold> skipped;
  Metrics overall;
  std::vector<StratumMetrics> strata;
};

struct EvalOptions {
  TrainerConfig trainer;
  std::uint64_t seed = 42;
  std::size_t jobs = 1;
  std::vector<std::string> strata;
};

EvalReport Evaluate(const FeatureMatrix& matrix, const EvalOptions& options, std::string name = "full");

struct ReportBundle {
  std::string kind;
  std::string trainer;
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  std::vector<EvalReport> reports;
  // Means over reports with a defined AUC; set for multi-run experiments.
  std::optional<double> mean_auc;
  std::optional<double> mean_accuracy;
};

inline constexpr std::string_view kReportSchema = "report/1";

std::string ReportToJson(const ReportBundle& bundle);
ReportBundle ReportFromJson(std::string_view text);

// Drops environment=lab rows and runs LOOCV once. Throws NoOp when the
// matrix has no lab rows.
ReportBundle AblateRemoveLab(const FeatureMatrix& matrix, const EvalOptions& options);
// Each run drops floor(fraction * n) randomly chosen home rows and runs
// LOOCV; the bundle carries every run and the means.
ReportBundle AblateRemoveRandom(const FeatureMatrix& matrix, const EvalOptions& options, double fraction,
                                std::size_t runs);

// "Algorithm | AUC | Accuracy" header plus one row per entry, three decimals.
std::string FormatTableRow(std::string_view algorithm, double auc, double accuracy);
std::string FormatResultsTable(const ReportBundle& bundle);

}  // namespace voxscreen
