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

#include "voxscreen/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "voxscreen/error.hpp"
#include "voxscreen/numeric.hpp"

namespace voxscreen {

using Json = nlohmann::ordered_json;

std::string TrainerConfigJson(const TrainerConfig& config) {
  Json j;
  j["kind"] = EnsembleKindName(config.kind);
  j["oversample"] = config.oversample;
  j["smote_k"] = config.smote_k;
  j["forest"] = {{"n_trees", config.forest.n_trees},
                 {"max_depth", config.forest.max_depth},
                 {"mtry", config.forest.mtry},
                 {"min_leaf", config.forest.min_leaf}};
  j["boosted"] = {{"n_rounds", config.boost.n_rounds},
                  {"max_depth", config.boost.max_depth},
                  {"learning_rate", config.boost.learning_rate},
                  {"lambda", config.boost.lambda},
                  {"min_child_weight", config.boost.min_child_weight}};
  return j.dump();
}

TrainerConfig TrainerConfigFromJson(std::string_view text) {
  TrainerConfig config;
  try {
    const Json j = Json::parse(text);
    if (j.contains("kind")) config.kind = ParseEnsembleKind(j.at("kind").get<std::string>());
    config.oversample = j.value("oversample", config.oversample);
    config.smote_k = j.value("smote_k", config.smote_k);
    if (j.contains("forest")) {
      const auto& f = j.at("forest");
      config.forest.n_trees = f.value("n_trees", config.forest.n_trees);
      config.forest.max_depth = f.value("max_depth", config.forest.max_depth);
      config.forest.mtry = f.value("mtry", config.forest.mtry);
      config.forest.min_leaf = f.value("min_leaf", config.forest.min_leaf);
    }
    if (j.contains("boosted")) {
      const auto& b = j.at("boosted");
      config.boost.n_rounds = b.value("n_rounds", config.boost.n_rounds);
      config.boost.max_depth = b.value("max_depth", config.boost.max_depth);
      config.boost.learning_rate = b.value("learning_rate", config.boost.learning_rate);
      config.boost.lambda = b.value("lambda", config.boost.lambda);
      config.boost.min_child_weight = b.value("min_child_weight", config.boost.min_child_weight);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("trainer config: ") + e.what());
  }
  return config;
}

std::string_view TrainerDisplayName(EnsembleKind kind) {
  return kind == EnsembleKind::kForest ? "Random Forest" : "XGBoost";
}

TreeEnsemble FitModel(const FeatureMatrix& train, const TrainerConfig& config, std::uint64_t seed) {
  const auto labels = train.Labels();
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || positives == static_cast<long>(labels.size())) {
    throw Error(ErrorKind::kDegenerateLabels, "training rows contain a single class");
  }
  const auto pre = Preprocessor::Fit(train.rows, train.num_features());
  FeatureMatrix prepared = pre.Transform(train);
  if (config.oversample) {
    try {
      prepared = Smote(prepared, {config.smote_k, DeriveSeed(seed, 1)});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kCannotOversample) throw;
    }
  }
  TreeEnsemble model;
  if (config.kind == EnsembleKind::kForest) {
    ForestConfig forest = config.forest;
    forest.seed = DeriveSeed(seed, 2);
    model = TrainForest(prepared, forest);
  } else {
    BoostConfig boost = config.boost;
    boost.seed = DeriveSeed(seed, 2);
    model = TrainBoosted(prepared, boost);
  }
  model.preprocess = pre;
  model.seed = seed;
  model.config_fingerprint = HexDigest(Fnv1a64(TrainerConfigJson(config)));
  return model;
}

namespace {

void RequireShapes(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::kInvalidArgument, "scores and labels differ in length");
}

}  // namespace

double Auc(std::span<const double> scores, std::span<const int> labels) {
  RequireShapes(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of midranks (1-based) of the positives.
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw Error(ErrorKind::kUndefined, "AUC needs both classes");
  const double np = static_cast<double>(positives);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(negatives));
}

AccuracyResult AccuracyConfusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
  RequireShapes(scores, labels);
  AccuracyResult result;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    auto& c = result.confusion;
    (predicted ? (actual ? c.tp : c.fp) : (actual ? c.fn : c.tn))++;
  }
  const auto& c = result.confusion;
  result.accuracy = scores.empty() ? kMissing : static_cast<double>(c.tp + c.tn) / static_cast<double>(scores.size());
  return result;
}

Metrics ComputeMetrics(std::span<const double> scores, std::span<const int> labels) {
  Metrics m;
  m.n = scores.size();
  m.positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const auto acc = AccuracyConfusion(scores, labels);
  m.accuracy = acc.accuracy;
  m.confusion = acc.confusion;
  if (m.positives > 0 && m.positives < m.n) m.auc = Auc(scores, labels);
  return m;
}

std::vector<std::string> ExpandStrata(std::string_view spec) {
  std::vector<std::string> out;
  auto add = [&](std::string_view name) {
    if (std::find(out.begin(), out.end(), name) == out.end()) out.emplace_back(name);
  };
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t comma = std::min(spec.find(',', start), spec.size());
    std::string_view token = spec.substr(start, comma - start);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (token == "gender") {
      add("male");
      add("female");
    } else if (token == "age" || token == "age50") {
      add("age50");
    } else if (token == "environment") {
      add("home");
      add("lab");
    } else if (token == "male" || token == "female" || token == "home" || token == "lab") {
      add(token);
    } else if (!token.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "unknown stratum '" + std::string(token) + "'");
    }
    start = comma + 1;
  }
  return out;
}

bool InStratum(const RecordMeta& meta, std::string_view stratum) {
  if (stratum == "male") return meta.gender == Gender::kMale;
  if (stratum == "female") return meta.gender == Gender::kFemale;
  if (stratum == "age50") return !IsMissing(meta.age) && meta.age >= 50.0;
  if (stratum == "home") return meta.environment == Environment::kHome;
  if (stratum == "lab") return meta.environment == Environment::kLab;
  throw Error(ErrorKind::kInvalidArgument, "unknown stratum '" + std::string(stratum) + "'");
}

std::vector<StratumMetrics> StratifiedEval(std::span<const double> scores, std::span<const int> labels,
                                           std::span<const RecordMeta> meta, std::span<const std::string> strata) {
  RequireShapes(scores, labels);
  if (meta.size() != scores.size()) throw Error(ErrorKind::kInvalidArgument, "metadata and scores differ in length");
  std::vector<StratumMetrics> out;
  for (const auto& name : strata) {
    std::vector<double> s;
    std::vector<int> l;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (InStratum(meta[i], name)) {
        s.push_back(scores[i]);
        l.push_back(labels[i]);
      }
    }
    out.push_back({name, ComputeMetrics(s, l)});
  }
  return out;
}

FoldResult RunFold(const FeatureMatrix& matrix, std::size_t held_out, const TrainerConfig& config,
                   std::uint64_t seed) {
  FoldResult fold;
  fold.index = held_out;
  fold.id = matrix.meta.at(held_out).id;
  fold.label = matrix.meta[held_out].label == Label::kPd ? 1 : 0;
  std::vector<std::size_t> train_rows;
  train_rows.reserve(matrix.size() - 1);
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    if (r != held_out) train_rows.push_back(r);
  }
  const auto train = matrix.SelectRows(train_rows);
  try {
    const auto model = FitModel(train, config, DeriveSeed(seed, held_out));
    fold.model_fingerprint = model.Fingerprint();
    fold.score = model.Score(matrix.rows[held_out]);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kDegenerateLabels) throw;
    fold.skipped = true;
    fold.reason = std::string(ErrorKindName(ErrorKind::kFoldDegenerate)) + ": training rows contain a single class";
  }
  return fold;
}

std::vector<FoldResult> Loocv(const FeatureMatrix& matrix, const TrainerConfig& config, std::uint64_t seed,
                              std::size_t jobs) {
  matrix.Validate();
  if (matrix.size() < 3) throw Error(ErrorKind::kInvalidArgument, "LOOCV needs at least three rows");
  const std::size_t n = matrix.size();
  std::vector<FoldResult> folds(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        folds[i] = RunFold(matrix, i, config, seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, n);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
  return folds;
}

EvalReport Evaluate(const FeatureMatrix& matrix, const EvalOptions& options, std::string name) {
  const auto folds = Loocv(matrix, options.trainer, options.seed, options.jobs);
  EvalReport report;
  report.name = std::move(name);
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<RecordMeta> meta;
  for (const auto& fold : folds) {
    if (fold.skipped) {
      report.skipped.push_back({fold.id, fold.reason});
      continue;
    }
    report.scores.push_back({fold.id, fold.label, fold.score, fold.model_fingerprint});
    scores.push_back(fold.score);
    labels.push_back(fold.label);
    meta.push_back(matrix.meta[fold.index]);
  }
  report.overall = ComputeMetrics(scores, labels);
  report.strata = StratifiedEval(scores, labels, meta, options.strata);
  return report;
}

namespace {

Json OptionalNumber(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

Json MetricsJson(const Metrics& m) {
  Json j;
  j["n"] = m.n;
  j["positives"] = m.positives;
  j["auc"] = OptionalNumber(m.auc);
  j["accuracy"] = IsMissing(m.accuracy) ? Json(nullptr) : Json(m.accuracy);
  j["confusion"] = {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"tn", m.confusion.tn}, {"fn", m.confusion.fn}};
  return j;
}

Metrics MetricsFromJson(const Json& j) {
  Metrics m;
  m.n = j.at("n").get<std::size_t>();
  m.positives = j.at("positives").get<std::size_t>();
  if (!j.at("auc").is_null()) m.auc = j.at("auc").get<double>();
  m.accuracy = j.at("accuracy").is_null() ? kMissing : j.at("accuracy").get<double>();
  const auto& c = j.at("confusion");
  m.confusion = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
                 c.at("fn").get<std::size_t>()};
  return m;
}

}  // namespace

std::string ReportToJson(const ReportBundle& bundle) {
  Json j;
  j["schema"] = kReportSchema;
  j["kind"] = bundle.kind;
  j["trainer"] = bundle.trainer;
  j["config_fingerprint"] = bundle.config_fingerprint;
  j["seed"] = bundle.seed;
  j["mean_auc"] = OptionalNumber(bundle.mean_auc);
  j["mean_accuracy"] = OptionalNumber(bundle.mean_accuracy);
  Json reports = Json::array();
  for (const auto& report : bundle.reports) {
    Json r;
    r["name"] = report.name;
    r["metrics"] = MetricsJson(report.overall);
    Json strata = Json::array();
    for (const auto& s : report.strata) {
      Json entry = MetricsJson(s.metrics);
      entry["name"] = s.name;
      entry["defined"] = s.metrics.defined();
      strata.push_back(std::move(entry));
    }
    r["strata"] = std::move(strata);
    Json skipped = Json::array();
    for (const auto& s : report.skipped) skipped.push_back({{"id", s.id}, {"reason", s.reason}});
    r["skipped"] = std::move(skipped);
    Json scores = Json::array();
    for (const auto& s : report.scores) {
      scores.push_back({{"id", s.id}, {"label", s.label}, {"score", s.score}, {"model", s.model_fingerprint}});
    }
    r["scores"] = std::move(scores);
    reports.push_back(std::move(r));
  }
  j["reports"] = std::move(reports);
  return j.dump(1) + "\n";
}

ReportBundle ReportFromJson(std::string_view text) {
  ReportBundle bundle;
  try {
    const Json j = Json::parse(text);
    if (j.value("schema", std::string()) != kReportSchema) {
      throw Error(ErrorKind::kSchemaError, "report schema is not " + std::string(kReportSchema));
    }
    bundle.kind = j.at("kind").get<std::string>();
    bundle.trainer = j.at("trainer").get<std::string>();
    bundle.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    bundle.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("mean_auc").is_null()) bundle.mean_auc = j.at("mean_auc").get<double>();
    if (!j.at("mean_accuracy").is_null()) bundle.mean_accuracy = j.at("mean_accuracy").get<double>();
    for (const auto& r : j.at("reports")) {
      EvalReport report;
      report.name = r.at("name").get<std::string>();
      report.overall = MetricsFromJson(r.at("metrics"));
      for (const auto& s : r.at("strata")) report.strata.push_back({s.at("name").get<std::string>(), MetricsFromJson(s)});
      for (const auto& s : r.at("skipped")) {
        report.skipped.push_back({s.at("id").get<std::string>(), s.at("reason").get<std::string>()});
      }
      for (const auto& s : r.at("scores")) {
        report.scores.push_back({s.at("id").get<std::string>(), s.at("label").get<int>(), s.at("score").get<double>(),
                                 s.at("model").get<std::string>()});
      }
      bundle.reports.push_back(std::move(report));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("report JSON: ") + e.what());
  }
  return bundle;
}

namespace {

void FillMeans(ReportBundle& bundle) {
  double auc_sum = 0.0, acc_sum = 0.0;
  std::size_t auc_count = 0, acc_count = 0;
  for (const auto& report : bundle.reports) {
    if (report.overall.auc) {
      auc_sum += *report.overall.auc;
      ++auc_count;
    }
    if (!IsMissing(report.overall.accuracy)) {
      acc_sum += report.overall.accuracy;
      ++acc_count;
    }
  }
  if (auc_count > 0) bundle.mean_auc = auc_sum / static_cast<double>(auc_count);
  if (acc_count > 0) bundle.mean_accuracy = acc_sum / static_cast<double>(acc_count);
}

ReportBundle NewBundle(std::string kind, const EvalOptions& options) {
  ReportBundle bundle;
  bundle.kind = std::move(kind);
  bundle.trainer = EnsembleKindName(options.trainer.kind);
  bundle.config_fingerprint = HexDigest(Fnv1a64(TrainerConfigJson(options.trainer)));
  bundle.seed = options.seed;
  return bundle;
}

}  // namespace

ReportBundle AblateRemoveLab(const FeatureMatrix& matrix, const EvalOptions& options) {
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    if (matrix.meta[r].environment != Environment::kLab) keep.push_back(r);
  }
  if (keep.size() == matrix.size()) throw Error(ErrorKind::kNoOp, "no lab rows to remove");
  auto bundle = NewBundle("ablation/remove-lab", options);
  bundle.reports.push_back(Evaluate(matrix.SelectRows(keep), options, "remove-lab"));
  FillMeans(bundle);
  return bundle;
}

ReportBundle AblateRemoveRandom(const FeatureMatrix& matrix, const EvalOptions& options, double fraction,
                                std::size_t runs) {
  if (!(fraction >= 0.0 && fraction < 1.0) || runs == 0) {
    throw Error(ErrorKind::kInvalidArgument, "fraction must lie in [0, 1) and runs must be positive");
  }
  // The small offset keeps products such as 0.07 * 100 from rounding down.
  const auto drop = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(matrix.size()) + 1e-9));
  if (drop == 0) throw Error(ErrorKind::kNoOp, "fraction removes no rows");
  std::vector<std::size_t> home;
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    if (matrix.meta[r].environment == Environment::kHome) home.push_back(r);
  }
  if (drop > home.size()) throw Error(ErrorKind::kInvalidArgument, "not enough home rows to remove");
  auto bundle = NewBundle("ablation/remove-random", options);
  for (std::size_t run = 0; run < runs; ++run) {
    Rng rng(DeriveSeed(DeriveSeed(options.seed, 0xab1a7e), run));
    auto pool = home;
    for (std::size_t i = 0; i < drop; ++i) std::swap(pool[i], pool[i + rng.Index(pool.size() - i)]);
    std::vector<bool> dropped(matrix.size(), false);
    for (std::size_t i = 0; i < drop; ++i) dropped[pool[i]] = true;
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < matrix.size(); ++r) {
      if (!dropped[r]) keep.push_back(r);
    }
    bundle.reports.push_back(Evaluate(matrix.SelectRows(keep), options, "remove-random-" + std::to_string(run)));
  }
  FillMeans(bundle);
  return bundle;
}

std::string FormatTableRow(std::string_view algorithm, double auc, double accuracy) {
  auto cell = [](double v) {
    if (IsMissing(v)) return std::string("n/a");
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.3f", v);
    return std::string(buffer);
  };
  return std::string(algorithm) + " | " + cell(auc) + " | " + cell(accuracy);
}

std::string FormatResultsTable(const ReportBundle& bundle) {
  const auto display = TrainerDisplayName(ParseEnsembleKind(bundle.trainer));
  std::string out = "Algorithm | AUC | Accuracy\n";
  for (const auto& report : bundle.reports) {
    std::string label(display);
    if (report.name != "full") label += " [" + report.name + "]";
    out += FormatTableRow(label, report.overall.auc.value_or(kMissing), report.overall.accuracy) + "\n";
    for (const auto& s : report.strata) {
      out += FormatTableRow(label + " {" + s.name + "}", s.metrics.auc.value_or(kMissing), s.metrics.accuracy) + "\n";
    }
  }
  if (bundle.reports.size() > 1) {
    out += FormatTableRow(std::string(display) + " [mean]", bundle.mean_auc.value_or(kMissing),
                          bundle.mean_accuracy.value_or(kMissing)) +
           "\n";
  }
  return out;
}

}  // namespace voxscreen
