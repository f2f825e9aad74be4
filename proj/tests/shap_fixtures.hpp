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

// Random tree ensembles with consistent covers for attribution tests.
#pragma once

#include <cstdint>

#include "voxscreen/learn.hpp"
#include "voxscreen/numeric.hpp"

namespace voxscreen::testing {

// Grows a random tree; features may repeat along a path.
inline int GrowRandom(DecisionTree& tree, Rng& rng, std::size_t p, std::size_t depth, std::size_t max_depth) {
  if (depth == max_depth || (depth > 0 && rng.Uniform() < 0.25)) {
    return tree.AddLeaf(rng.Normal(), static_cast<double>(1 + rng.Index(20)));
  }
  const int id = tree.AddSplit(static_cast<int>(rng.Index(p)), rng.Uniform(-1.0, 1.0), 0.0);
  const int l = GrowRandom(tree, rng, p, depth + 1, max_depth);
  const int r = GrowRandom(tree, rng, p, depth + 1, max_depth);
  tree.left[id] = l;
  tree.right[id] = r;
  tree.cover[id] = tree.cover[l] + tree.cover[r];
  return id;
}

inline TreeEnsemble RandomEnsemble(Rng& rng, std::size_t p, std::size_t max_depth, std::size_t max_trees) {
  TreeEnsemble model;
  model.kind = rng.Uniform() < 0.5 ? EnsembleKind::kForest : EnsembleKind::kBoosted;
  for (std::size_t f = 0; f < p; ++f) model.feature_names.push_back("x" + std::to_string(f));
  const std::size_t trees = 1 + rng.Index(max_trees);
  for (std::size_t t = 0; t < trees; ++t) {
    DecisionTree tree;
    GrowRandom(tree, rng, p, 0, 1 + rng.Index(max_depth));
    model.trees.push_back(std::move(tree));
    model.tree_weights.push_back(model.kind == EnsembleKind::kForest ? 1.0 : rng.Uniform(0.05, 1.0));
  }
  model.base_score = model.kind == EnsembleKind::kBoosted ? rng.Normal() : 0.0;
  return model;
}

inline std::vector<double> RandomRow(Rng& rng, std::size_t p) {
  std::vector<double> x(p);
  for (auto& v : x) v = rng.Uniform(-1.2, 1.2);
  return x;
}

}  // namespace voxscreen::testing
