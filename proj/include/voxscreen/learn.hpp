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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voxscreen/dataset.hpp"

namespace voxscreen {

// Flattened binary tree. Node 0 is the root; a sample goes left when
// x[feature] < threshold. Leaves have feature == -1.
struct DecisionTree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;
  // Number of training samples (with bootstrap multiplicity) reaching the node.
  std::vector<double> cover;

  std::size_t size() const { return feature.size(); }
  bool IsLeaf(std::size_t node) const { return feature[node] < 0; }
  int AddLeaf(double leaf_value, double leaf_cover);
  int AddSplit(int split_feature, double split_threshold, double node_cover);
  double Predict(std::span<const double> x) const;

  bool operator==(const DecisionTree&) const = default;
};

enum class EnsembleKind { kForest, kBoosted };

std::string_view EnsembleKindName(EnsembleKind kind);
EnsembleKind ParseEnsembleKind(std::string_view text);

struct TreeEnsemble {
  EnsembleKind kind = EnsembleKind::kBoosted;
  std::vector<std::string> feature_names;
  std::vector<DecisionTree> trees;
  std::vector<double> tree_weights;
  // Log-odds offset for boosted models; 0 for forests.
  double base_score = 0.0;
  // Applied by Score() to raw rows; empty means rows are used as given.
  Preprocessor preprocess;
  std::string config_fingerprint;
  std::uint64_t seed = 0;

  // Forests average their trees; boosted models sum them.
  double TreeScale() const;
  // Pre-link output: forest mean leaf fraction, boosted log-odds.
  double Margin(std::span<const double> x) const;
  // Probability for a row that is already imputed and transformed.
  double PredictProba(std::span<const double> x) const;
  // Probability for a raw row with possible missing cells.
  double Score(std::span<const double> raw) const;

  std::string ToJson() const;
  static TreeEnsemble FromJson(std::string_view text);
  // FNV-1a digest of ToJson().
  std::string Fingerprint() const;
};

inline constexpr std::string_view kModelVersion = "voxscreen-model/1";

struct ForestConfig {
  std::size_t n_trees = 200;
  std::size_t max_depth = 8;
  // 0 selects floor(sqrt(p)).
  std::size_t mtry = 0;
  std::size_t min_leaf = 2;
  std::uint64_t seed = 42;
};

struct BoostConfig {
  std::size_t n_rounds = 300;
  std::size_t max_depth = 4;
  double learning_rate = 0.1;
  double lambda = 1.0;
  double min_child_weight = 1.0;
  std::uint64_t seed = 42;
};

// Both trainers expect complete rows and both classes present.
TreeEnsemble TrainForest(const FeatureMatrix& matrix, const ForestConfig& config = {});
TreeEnsemble TrainBoosted(const FeatureMatrix& matrix, const BoostConfig& config = {});

// Midpoint between adjacent distinct values a < b that still separates them.
double SplitThreshold(double a, double b);

double Sigmoid(double z);
// Mean logistic loss of the model on a labelled matrix.
double LogisticLoss(const TreeEnsemble& model, const FeatureMatrix& matrix);

}  // namespace voxscreen
