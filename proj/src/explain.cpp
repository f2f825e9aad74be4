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

#include "voxscreen/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "voxscreen/error.hpp"
#include "voxscreen/numeric.hpp"

namespace voxscreen {

namespace {

void RequireCovers(const TreeEnsemble& model) {
  for (const auto& tree : model.trees) {
    if (tree.cover.size() != tree.size()) throw Error(ErrorKind::kModelUnsupported, "tree has no cover counts");
    for (std::size_t i = 0; i < tree.size(); ++i) {
      if (!tree.IsLeaf(i) && !(tree.cover[i] > 0.0)) {
        throw Error(ErrorKind::kModelUnsupported, "internal node with zero cover");
      }
    }
  }
}

double TreeExpectation(const DecisionTree& tree, std::size_t node) {
  if (tree.IsLeaf(node)) return tree.value[node];
  const auto l = static_cast<std::size_t>(tree.left[node]);
  const auto r = static_cast<std::size_t>(tree.right[node]);
  return (tree.cover[l] * TreeExpectation(tree, l) + tree.cover[r] * TreeExpectation(tree, r)) / tree.cover[node];
}

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double weight = 0.0;
};

void ExtendPath(std::vector<PathElement>& path, std::size_t depth, double zero_fraction, double one_fraction,
                int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (std::size_t i = depth; i-- > 0;) {
    path[i + 1].weight += one_fraction * path[i].weight * static_cast<double>(i + 1) / static_cast<double>(depth + 1);
    path[i].weight = zero_fraction * path[i].weight * static_cast<double>(depth - i) / static_cast<double>(depth + 1);
  }
}

void UnwindPath(std::vector<PathElement>& path, std::size_t depth, std::size_t index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].weight;
  for (std::size_t i = depth; i-- > 0;) {
    if (one_fraction != 0.0) {
      const double saved = path[i].weight;
      path[i].weight = next_one_portion * static_cast<double>(depth + 1) / (static_cast<double>(i + 1) * one_fraction);
      next_one_portion =
          saved - path[i].weight * zero_fraction * static_cast<double>(depth - i) / static_cast<double>(depth + 1);
    } else {
      path[i].weight = path[i].weight * static_cast<double>(depth + 1) / (zero_fraction * static_cast<double>(depth - i));
    }
  }
  for (std::size_t i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

// Total weight the path would carry with element index removed.
double UnwoundPathSum(const std::vector<PathElement>& path, std::size_t depth, std::size_t index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].weight;
  double total = 0.0;
  for (std::size_t i = depth; i-- > 0;) {
    const double ratio = static_cast<double>(depth - i) / static_cast<double>(depth + 1);
    if (one_fraction != 0.0) {
      const double w = next_one_portion * static_cast<double>(depth + 1) / (static_cast<double>(i + 1) * one_fraction);
      total += w;
      next_one_portion = path[i].weight - w * zero_fraction * ratio;
    } else if (zero_fraction != 0.0) {
      total += path[i].weight / zero_fraction / ratio;
    }
  }
  return total;
}

void Recurse(const DecisionTree& tree, std::span<const double> x, std::vector<double>& phi, std::size_t node,
             std::vector<PathElement> path, std::size_t depth, double zero_fraction, double one_fraction,
             int feature) {
  path.resize(depth + 1);
  ExtendPath(path, depth, zero_fraction, one_fraction, feature);
  if (tree.IsLeaf(node)) {
    for (std::size_t i = 1; i <= depth; ++i) {
      const double w = UnwoundPathSum(path, depth, i);
      const auto& e = path[i];
      phi[e.feature] += w * (e.one_fraction - e.zero_fraction) * tree.value[node];
    }
    return;
  }
  const int split = tree.feature[node];
  const bool go_left = x[split] < tree.threshold[node];
  const auto hot = static_cast<std::size_t>(go_left ? tree.left[node] : tree.right[node]);
  const auto cold = static_cast<std::size_t>(go_left ? tree.right[node] : tree.left[node]);
  const double hot_zero = tree.cover[hot] / tree.cover[node];
  const double cold_zero = tree.cover[cold] / tree.cover[node];
  double incoming_zero = 1.0;
  double incoming_one = 1.0;
  // A feature met again on the path is folded into a single element.
  std::size_t index = 0;
  while (index <= depth && path[index].feature != split) ++index;
  if (index <= depth) {
    incoming_zero = path[index].zero_fraction;
    incoming_one = path[index].one_fraction;
    UnwindPath(path, depth, index);
    --depth;
  }
  Recurse(tree, x, phi, hot, path, depth + 1, hot_zero * incoming_zero, incoming_one, split);
  Recurse(tree, x, phi, cold, path, depth + 1, cold_zero * incoming_zero, 0.0, split);
}

// Conditional expectation of a tree given that features in mask are known.
double Conditional(const DecisionTree& tree, std::size_t node, std::span<const double> x, std::uint32_t mask) {
  if (tree.IsLeaf(node)) return tree.value[node];
  const auto l = static_cast<std::size_t>(tree.left[node]);
  const auto r = static_cast<std::size_t>(tree.right[node]);
  const int f = tree.feature[node];
  if (mask & (1u << f)) return Conditional(tree, x[f] < tree.threshold[node] ? l : r, x, mask);
  return (tree.cover[l] * Conditional(tree, l, x, mask) + tree.cover[r] * Conditional(tree, r, x, mask)) /
         tree.cover[node];
}

void RequireWidth(const TreeEnsemble& model, std::span<const double> x) {
  if (x.size() != model.feature_names.size()) {
    throw Error(ErrorKind::kSchemaError, "row width does not match the model");
  }
}

}  // namespace

double ExpectedMargin(const TreeEnsemble& model) {
  RequireCovers(model);
  double sum = 0.0;
  for (std::size_t t = 0; t < model.trees.size(); ++t) sum += model.tree_weights[t] * TreeExpectation(model.trees[t], 0);
  return model.base_score + model.TreeScale() * sum;
}

ShapAttribution TreeShap(const TreeEnsemble& model, std::span<const double> x) {
  RequireWidth(model, x);
  ShapAttribution out;
  out.base_value = ExpectedMargin(model);
  out.phi.assign(x.size(), 0.0);
  std::vector<double> tree_phi(x.size());
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    std::fill(tree_phi.begin(), tree_phi.end(), 0.0);
    Recurse(model.trees[t], x, tree_phi, 0, {}, 0, 1.0, 1.0, -1);
    const double w = model.TreeScale() * model.tree_weights[t];
    for (std::size_t f = 0; f < x.size(); ++f) out.phi[f] += w * tree_phi[f];
  }
  return out;
}

ShapAttribution BruteForceShap(const TreeEnsemble& model, std::span<const double> x) {
  RequireWidth(model, x);
  const std::size_t p = x.size();
  if (p > 15) throw Error(ErrorKind::kTooLarge, "exhaustive Shapley values need at most 15 features");
  RequireCovers(model);
  const std::uint32_t subsets = 1u << p;
  std::vector<double> value(subsets, 0.0);
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    double sum = 0.0;
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
      sum += model.tree_weights[t] * Conditional(model.trees[t], 0, x, mask);
    }
    value[mask] = model.base_score + model.TreeScale() * sum;
  }
  // weight[s] = s! (p - s - 1)! / p!
  std::vector<double> weight(p, 0.0);
  for (std::size_t s = 0; s < p; ++s) {
    weight[s] = std::exp(std::lgamma(s + 1.0) + std::lgamma(static_cast<double>(p - s)) - std::lgamma(p + 1.0));
  }
  ShapAttribution out;
  out.base_value = value[0];
  out.phi.assign(p, 0.0);
  for (std::size_t f = 0; f < p; ++f) {
    const std::uint32_t bit = 1u << f;
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      out.phi[f] += weight[static_cast<std::size_t>(__builtin_popcount(mask))] * (value[mask | bit] - value[mask]);
    }
  }
  return out;
}

std::vector<ImportanceEntry> GlobalImportance(std::span<const ShapAttribution> attributions,
                                              std::span<const std::string> feature_names) {
  if (attributions.empty()) throw Error(ErrorKind::kInvalidArgument, "no attributions to aggregate");
  std::vector<ImportanceEntry> out;
  for (std::size_t f = 0; f < feature_names.size(); ++f) {
    double sum = 0.0;
    for (const auto& a : attributions) {
      if (a.phi.size() != feature_names.size()) {
        throw Error(ErrorKind::kSchemaError, "attribution width does not match feature names");
      }
      sum += std::abs(a.phi[f]);
    }
    out.push_back({feature_names[f], sum / static_cast<double>(attributions.size())});
  }
  std::sort(out.begin(), out.end(), [](const ImportanceEntry& a, const ImportanceEntry& b) {
    if (a.mean_abs_phi != b.mean_abs_phi) return a.mean_abs_phi > b.mean_abs_phi;
    return a.feature < b.feature;
  });
  return out;
}

std::vector<ShapAttribution> ExplainMatrix(const TreeEnsemble& model, const FeatureMatrix& matrix) {
  std::vector<ShapAttribution> out;
  out.reserve(matrix.size());
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    const auto x = model.preprocess.empty() ? matrix.rows[r] : model.preprocess.Transform(matrix.rows[r]);
    auto a = TreeShap(model, x);
    a.id = matrix.meta[r].id;
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<CurvePoint> ShapValidationCurve(const FeatureMatrix& matrix, std::span<const ImportanceEntry> ranking,
                                            const EvalOptions& options, std::size_t max_k) {
  for (const auto& entry : ranking) matrix.FeatureIndex(entry.feature);
  const std::size_t k_max = std::min(max_k, ranking.size());
  std::vector<CurvePoint> curve;
  for (std::size_t k = 1; k <= k_max; ++k) {
    std::vector<std::string> chosen;
    for (const auto& name : matrix.feature_names) {
      const auto top_end = ranking.begin() + static_cast<long>(k);
      if (std::any_of(ranking.begin(), top_end, [&](const ImportanceEntry& e) { return e.feature == name; })) {
        chosen.push_back(name);
      }
    }
    const auto report = Evaluate(matrix.SelectFeatures(chosen), options, "top-" + std::to_string(k));
    curve.push_back({k, report.overall.auc, report.overall.accuracy, std::nullopt});
  }
  for (std::size_t i = 0; i < curve.size(); ++i) {
    double sum = 0.0;
    std::size_t count = 0;
    bool complete = true;
    for (std::size_t j = i == 0 ? 0 : i - 1; j <= std::min(i + 1, curve.size() - 1); ++j) {
      if (!curve[j].auc) complete = false;
      sum += curve[j].auc.value_or(0.0);
      ++count;
    }
    if (complete) curve[i].auc_ma3 = sum / static_cast<double>(count);
  }
  return curve;
}

std::string AttributionsCsv(std::span<const ShapAttribution> attributions, std::span<const std::string> feature_names) {
  std::string out = "id,base";
  for (const auto& name : feature_names) out += "," + CsvEscape(name);
  out += '\n';
  for (const auto& a : attributions) {
    out += CsvEscape(a.id) + "," + FormatDouble(a.base_value);
    for (double v : a.phi) out += "," + FormatDouble(v);
    out += '\n';
  }
  return out;
}

using Json = nlohmann::ordered_json;

std::string ImportanceJson(std::span<const ImportanceEntry> ranking, const std::string& config_fingerprint,
                           std::uint64_t seed) {
  Json j;
  j["schema"] = "importance/1";
  j["config_fingerprint"] = config_fingerprint;
  j["seed"] = seed;
  Json entries = Json::array();
  for (const auto& e : ranking) entries.push_back({{"feature", e.feature}, {"mean_abs_phi", e.mean_abs_phi}});
  j["ranking"] = std::move(entries);
  return j.dump(1) + "\n";
}

std::string CurveJson(std::span<const CurvePoint> curve, const std::string& config_fingerprint, std::uint64_t seed) {
  Json j;
  j["schema"] = "validation-curve/1";
  j["config_fingerprint"] = config_fingerprint;
  j["seed"] = seed;
  Json points = Json::array();
  for (const auto& p : curve) {
    points.push_back({{"k", p.k},
                      {"auc", p.auc ? Json(*p.auc) : Json(nullptr)},
                      {"accuracy", IsMissing(p.accuracy) ? Json(nullptr) : Json(p.accuracy)},
                      {"auc_ma3", p.auc_ma3 ? Json(*p.auc_ma3) : Json(nullptr)}});
  }
  j["curve"] = std::move(points);
  return j.dump(1) + "\n";
}

std::string CurveTsv(std::span<const CurvePoint> curve) {
  std::string out = "k\tauc\taccuracy\tauc_ma3\n";
  for (const auto& p : curve) {
    out += std::to_string(p.k) + "\t" + FormatDouble(p.auc.value_or(kMissing)) + "\t" + FormatDouble(p.accuracy) +
           "\t" + FormatDouble(p.auc_ma3.value_or(kMissing)) + "\n";
  }
  return out;
}

}  // namespace voxscreen
