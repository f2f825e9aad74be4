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

#include "voxscreen/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "voxscreen/error.hpp"
#include "voxscreen/numeric.hpp"

namespace voxscreen {

int DecisionTree::AddLeaf(double leaf_value, double leaf_cover) {
  feature.push_back(-1);
  threshold.push_back(0.0);
  left.push_back(-1);
  right.push_back(-1);
  value.push_back(leaf_value);
  cover.push_back(leaf_cover);
  return static_cast<int>(feature.size() - 1);
}

int DecisionTree::AddSplit(int split_feature, double split_threshold, double node_cover) {
  const int id = AddLeaf(0.0, node_cover);
  feature[id] = split_feature;
  threshold[id] = split_threshold;
  return id;
}

double DecisionTree::Predict(std::span<const double> x) const {
  std::size_t node = 0;
  while (!IsLeaf(node)) {
    node = static_cast<std::size_t>(x[feature[node]] < threshold[node] ? left[node] : right[node]);
  }
  return value[node];
}

std::string_view EnsembleKindName(EnsembleKind kind) { return kind == EnsembleKind::kForest ? "forest" : "boosted"; }

EnsembleKind ParseEnsembleKind(std::string_view text) {
  if (text == "forest") return EnsembleKind::kForest;
  if (text == "boosted") return EnsembleKind::kBoosted;
  throw Error(ErrorKind::kModelUnsupported, "unknown ensemble kind '" + std::string(text) + "'");
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double TreeEnsemble::TreeScale() const {
  if (kind == EnsembleKind::kForest && !trees.empty()) return 1.0 / static_cast<double>(trees.size());
  return 1.0;
}

double TreeEnsemble::Margin(std::span<const double> x) const {
  if (x.size() != feature_names.size()) {
    throw Error(ErrorKind::kSchemaError, "row has " + std::to_string(x.size()) + " features, model expects " +
                                             std::to_string(feature_names.size()));
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < trees.size(); ++t) sum += tree_weights[t] * trees[t].Predict(x);
  return base_score + TreeScale() * sum;
}

double TreeEnsemble::PredictProba(std::span<const double> x) const {
  const double margin = Margin(x);
  return kind == EnsembleKind::kForest ? std::clamp(margin, 0.0, 1.0) : Sigmoid(margin);
}

double TreeEnsemble::Score(std::span<const double> raw) const {
  if (preprocess.empty()) return PredictProba(raw);
  return PredictProba(preprocess.Transform(raw));
}

using Json = nlohmann::ordered_json;

std::string TreeEnsemble::ToJson() const {
  Json j;
  j["version"] = kModelVersion;
  j["kind"] = EnsembleKindName(kind);
  j["seed"] = seed;
  j["config_fingerprint"] = config_fingerprint;
  j["base_score"] = base_score;
  j["feature_names"] = feature_names;
  j["tree_weights"] = tree_weights;
  Json pre = Json::object();
  pre["median"] = preprocess.median;
  pre["mean"] = preprocess.mean;
  pre["scale"] = preprocess.scale;
  j["preprocess"] = pre;
  Json trees_json = Json::array();
  for (const auto& tree : trees) {
    Json t;
    t["feature"] = tree.feature;
    t["threshold"] = tree.threshold;
    t["left"] = tree.left;
    t["right"] = tree.right;
    t["value"] = tree.value;
    t["cover"] = tree.cover;
    trees_json.push_back(std::move(t));
  }
  j["trees"] = std::move(trees_json);
  return j.dump(1) + "\n";
}

namespace {

void CheckTree(const DecisionTree& tree, std::size_t num_features) {
  const std::size_t n = tree.size();
  if (n == 0 || tree.threshold.size() != n || tree.left.size() != n || tree.right.size() != n ||
      tree.value.size() != n || (!tree.cover.empty() && tree.cover.size() != n)) {
    throw Error(ErrorKind::kSchemaError, "tree arrays have inconsistent lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (tree.IsLeaf(i)) continue;
    const auto in_range = [&](int child) { return child > static_cast<int>(i) && child < static_cast<int>(n); };
    if (static_cast<std::size_t>(tree.feature[i]) >= num_features || !in_range(tree.left[i]) ||
        !in_range(tree.right[i])) {
      throw Error(ErrorKind::kSchemaError, "tree node " + std::to_string(i) + " is malformed");
    }
  }
}

}  // namespace

TreeEnsemble TreeEnsemble::FromJson(std::string_view text) {
  TreeEnsemble model;
  try {
    const Json j = Json::parse(text);
    if (!j.contains("version") || j.at("version").get<std::string>() != kModelVersion) {
      throw Error(ErrorKind::kModelUnsupported, "unsupported model version");
    }
    model.kind = ParseEnsembleKind(j.at("kind").get<std::string>());
    model.seed = j.value("seed", std::uint64_t{0});
    model.config_fingerprint = j.value("config_fingerprint", std::string());
    model.base_score = j.at("base_score").get<double>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.tree_weights = j.at("tree_weights").get<std::vector<double>>();
    if (j.contains("preprocess")) {
      const auto& pre = j.at("preprocess");
      model.preprocess.median = pre.at("median").get<std::vector<double>>();
      model.preprocess.mean = pre.at("mean").get<std::vector<double>>();
      model.preprocess.scale = pre.at("scale").get<std::vector<double>>();
    }
    for (const auto& t : j.at("trees")) {
      DecisionTree tree;
      tree.feature = t.at("feature").get<std::vector<int>>();
      tree.threshold = t.at("threshold").get<std::vector<double>>();
      tree.left = t.at("left").get<std::vector<int>>();
      tree.right = t.at("right").get<std::vector<int>>();
      tree.value = t.at("value").get<std::vector<double>>();
      if (t.contains("cover")) tree.cover = t.at("cover").get<std::vector<double>>();
      model.trees.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("model JSON: ") + e.what());
  }
  if (model.tree_weights.size() != model.trees.size()) {
    throw Error(ErrorKind::kSchemaError, "tree weight count differs from tree count");
  }
  const std::size_t p = model.feature_names.size();
  if (!model.preprocess.empty() &&
      (model.preprocess.median.size() != p || model.preprocess.mean.size() != p || model.preprocess.scale.size() != p)) {
    throw Error(ErrorKind::kSchemaError, "preprocess arrays do not match feature count");
  }
  for (const auto& tree : model.trees) CheckTree(tree, p);
  return model;
}

std::string TreeEnsemble::Fingerprint() const { return HexDigest(Fnv1a64(ToJson())); }

double SplitThreshold(double a, double b) {
  const double mid = a + (b - a) / 2.0;
  if (mid <= a) return b;
  return std::min(mid, b);
}

double LogisticLoss(const TreeEnsemble& model, const FeatureMatrix& matrix) {
  const auto labels = matrix.Labels();
  double loss = 0.0;
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    const double p = std::clamp(model.PredictProba(matrix.rows[r]), 1e-15, 1.0 - 1e-15);
    loss -= labels[r] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return loss / static_cast<double>(matrix.size());
}

namespace {

// Additive node statistics: weight plus two criterion sums.
struct Stats {
  double count = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;

  void Add(const Stats& o) {
    count += o.count;
    s1 += o.s1;
    s2 += o.s2;
  }
  Stats Minus(const Stats& o) const { return {count - o.count, s1 - o.s1, s2 - o.s2}; }
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Gains below this are treated as rounding noise.
constexpr double kMinGain = 1e-12;

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x, std::size_t num_features)
      : x_(x), sorted_(num_features), mark_(x.size(), 0) {
    for (std::size_t f = 0; f < num_features; ++f) {
      auto& order = sorted_[f];
      order.resize(x.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x[a][f] < x[b][f]; });
    }
  }

  // Best split over the candidate features (ascending), first strict
  // maximum wins so ties go to the lowest feature and threshold.
  template <typename Gain>
  Split FindSplit(const std::vector<int>& samples, const std::vector<Stats>& stats,
                  const std::vector<std::size_t>& candidates, const Gain& gain) {
    for (int s : samples) mark_[s] = 1;
    Stats total;
    for (int s : samples) total.Add(stats[s]);
    Split best;
    best.gain = kMinGain;
    for (std::size_t f : candidates) {
      Stats left;
      int previous = -1;
      for (int s : sorted_[f]) {
        if (!mark_[s]) continue;
        if (previous >= 0 && x_[s][f] > x_[previous][f]) {
          const double g = gain(left, total.Minus(left), total);
          if (g > best.gain) {
            best.gain = g;
            best.feature = static_cast<int>(f);
            best.threshold = SplitThreshold(x_[previous][f], x_[s][f]);
          }
        }
        left.Add(stats[s]);
        previous = s;
      }
    }
    for (int s : samples) mark_[s] = 0;
    return best;
  }

  void Partition(const std::vector<int>& samples, const Split& split, std::vector<int>& left,
                 std::vector<int>& right) const {
    for (int s : samples) (x_[s][split.feature] < split.threshold ? left : right).push_back(s);
  }

 private:
  const std::vector<std::vector<double>>& x_;
  std::vector<std::vector<int>> sorted_;
  std::vector<char> mark_;
};

void RequireTrainable(const FeatureMatrix& matrix) {
  matrix.Validate();
  if (matrix.size() < 2) throw Error(ErrorKind::kInvalidArgument, "training needs at least two rows");
  if (matrix.num_features() == 0) throw Error(ErrorKind::kInvalidArgument, "training needs at least one feature");
  for (const auto& row : matrix.rows) {
    for (double v : row) {
      if (!std::isfinite(v)) throw Error(ErrorKind::kInvalidArgument, "training rows must be imputed and finite");
    }
  }
  const auto labels = matrix.Labels();
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || positives == static_cast<long>(labels.size())) {
    throw Error(ErrorKind::kDegenerateLabels, "training labels contain a single class");
  }
}

double Gini(const Stats& s) {
  const double p = s.s1 / s.count;
  return 2.0 * p * (1.0 - p);
}

}  // namespace

TreeEnsemble TrainForest(const FeatureMatrix& matrix, const ForestConfig& config) {
  RequireTrainable(matrix);
  if (config.n_trees == 0) throw Error(ErrorKind::kInvalidArgument, "forest needs at least one tree");
  const std::size_t n = matrix.size();
  const std::size_t p = matrix.num_features();
  const std::size_t mtry =
      std::clamp<std::size_t>(config.mtry > 0 ? config.mtry : static_cast<std::size_t>(std::sqrt(p)), 1, p);
  const double min_leaf = static_cast<double>(std::max<std::size_t>(config.min_leaf, 1));
  const auto labels = matrix.Labels();
  TreeBuilder builder(matrix.rows, p);

  auto gain = [&](const Stats& l, const Stats& r, const Stats& total) {
    if (l.count < min_leaf || r.count < min_leaf) return -1.0;
    return total.count * Gini(total) - l.count * Gini(l) - r.count * Gini(r);
  };

  TreeEnsemble model;
  model.kind = EnsembleKind::kForest;
  model.feature_names = matrix.feature_names;
  model.seed = config.seed;
  std::vector<std::size_t> all_features(p);
  std::iota(all_features.begin(), all_features.end(), 0);
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    Rng rng(DeriveSeed(config.seed, t));
    std::vector<Stats> stats(n);
    for (std::size_t draw = 0; draw < n; ++draw) {
      const std::size_t s = rng.Index(n);
      stats[s].count += 1.0;
      stats[s].s1 += labels[s];
    }
    std::vector<int> root;
    for (std::size_t s = 0; s < n; ++s) {
      if (stats[s].count > 0.0) root.push_back(static_cast<int>(s));
    }
    DecisionTree tree;
    auto build = [&](auto&& self, const std::vector<int>& samples, std::size_t depth) -> int {
      Stats total;
      for (int s : samples) total.Add(stats[s]);
      const double fraction = total.s1 / total.count;
      if (depth >= config.max_depth || total.count < 2.0 * min_leaf || fraction == 0.0 || fraction == 1.0) {
        return tree.AddLeaf(fraction, total.count);
      }
      // Partial Fisher-Yates draw of mtry features, scanned in index order.
      auto pool = all_features;
      for (std::size_t i = 0; i < mtry; ++i) std::swap(pool[i], pool[i + rng.Index(p - i)]);
      std::vector<std::size_t> candidates(pool.begin(), pool.begin() + static_cast<long>(mtry));
      std::sort(candidates.begin(), candidates.end());
      const Split split = builder.FindSplit(samples, stats, candidates, gain);
      if (split.feature < 0) return tree.AddLeaf(fraction, total.count);
      std::vector<int> left, right;
      builder.Partition(samples, split, left, right);
      const int id = tree.AddSplit(split.feature, split.threshold, total.count);
      const int l = self(self, left, depth + 1);
      const int r = self(self, right, depth + 1);
      tree.left[id] = l;
      tree.right[id] = r;
      return id;
    };
    build(build, root, 0);
    model.trees.push_back(std::move(tree));
    model.tree_weights.push_back(1.0);
  }
  return model;
}

TreeEnsemble TrainBoosted(const FeatureMatrix& matrix, const BoostConfig& config) {
  RequireTrainable(matrix);
  if (!(config.learning_rate > 0.0) || config.lambda < 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "boosting needs a positive learning rate and non-negative lambda");
  }
  const std::size_t n = matrix.size();
  const std::size_t p = matrix.num_features();
  const auto labels = matrix.Labels();
  TreeBuilder builder(matrix.rows, p);

  TreeEnsemble model;
  model.kind = EnsembleKind::kBoosted;
  model.feature_names = matrix.feature_names;
  model.seed = config.seed;
  const double prior = static_cast<double>(std::count(labels.begin(), labels.end(), 1)) / static_cast<double>(n);
  model.base_score = std::log(prior / (1.0 - prior));

  const double lambda = config.lambda;
  auto score = [lambda](const Stats& s) { return s.s1 * s.s1 / (s.s2 + lambda); };
  auto gain = [&](const Stats& l, const Stats& r, const Stats& total) {
    if (l.s2 < config.min_child_weight || r.s2 < config.min_child_weight) return -1.0;
    return 0.5 * (score(l) + score(r) - score(total));
  };

  std::vector<double> margin(n, model.base_score);
  std::vector<std::size_t> all_features(p);
  std::iota(all_features.begin(), all_features.end(), 0);
  std::vector<int> root(n);
  std::iota(root.begin(), root.end(), 0);
  for (std::size_t round = 0; round < config.n_rounds; ++round) {
    std::vector<Stats> stats(n);
    for (std::size_t s = 0; s < n; ++s) {
      const double prob = Sigmoid(margin[s]);
      stats[s] = {1.0, prob - labels[s], std::max(prob * (1.0 - prob), 1e-16)};
    }
    DecisionTree tree;
    auto build = [&](auto&& self, const std::vector<int>& samples, std::size_t depth) -> int {
      Stats total;
      for (int s : samples) total.Add(stats[s]);
      const double leaf = -total.s1 / (total.s2 + lambda);
      if (depth >= config.max_depth || samples.size() < 2) return tree.AddLeaf(leaf, total.count);
      const Split split = builder.FindSplit(samples, stats, all_features, gain);
      if (split.feature < 0) return tree.AddLeaf(leaf, total.count);
      std::vector<int> left, right;
      builder.Partition(samples, split, left, right);
      const int id = tree.AddSplit(split.feature, split.threshold, total.count);
      const int l = self(self, left, depth + 1);
      const int r = self(self, right, depth + 1);
      tree.left[id] = l;
      tree.right[id] = r;
      return id;
    };
    build(build, root, 0);
    for (std::size_t s = 0; s < n; ++s) margin[s] += config.learning_rate * tree.Predict(matrix.rows[s]);
    model.trees.push_back(std::move(tree));
    model.tree_weights.push_back(config.learning_rate);
  }
  return model;
}

}  // namespace voxscreen
