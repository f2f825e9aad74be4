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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "voxscreen/eval.hpp"

using namespace voxscreen;
using namespace voxscreen::testing;

namespace {

// Independent pair-counting oracle.
double PairAuc(const std::vector<double>& s, const std::vector<int>& l) {
  double concordant = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (l[i] != 1 || l[j] != 0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) concordant += 1.0;
      if (s[i] == s[j]) concordant += 0.5;
    }
  }
  return concordant / pairs;
}

TrainerConfig FastTrainer() {
  TrainerConfig config;
  config.boost.n_rounds = 20;
  config.boost.max_depth = 2;
  return config;
}

// Two Gaussian clusters separated along the first two features.
FeatureMatrix Clusters(std::size_t n, double separation, std::uint64_t seed) {
  auto m = RandomMatrix(n, 5, seed);
  for (std::size_t r = 0; r < n; ++r) {
    const bool pd = r % 2 == 0;
    m.meta[r].label = pd ? Label::kPd : Label::kNonPd;
    if (pd) {
      m.rows[r][0] += separation;
      m.rows[r][1] -= separation;
    }
  }
  return m;
}

}  // namespace

TEST_CASE("AUC hand cases") {
  CHECK(Auc(std::vector<double>{.9, .8, .3, .2}, std::vector<int>{1, 1, 0, 0}) == 1.0);
  CHECK(Auc(std::vector<double>{.9, .2, .8, .3}, std::vector<int>{1, 0, 0, 1}) == 0.75);
  CHECK(Auc(std::vector<double>(6, 0.4), std::vector<int>{1, 0, 1, 0, 0, 1}) == 0.5);
  CHECK(KindOf([] { Auc(std::vector<double>{.1, .2}, std::vector<int>{1, 1}); }) == ErrorKind::kUndefined);
}

TEST_CASE("rank AUC equals pair counting exactly") {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.Index(60);
    std::vector<double> s(n);
    std::vector<int> l(n);
    const bool coarse = trial % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse ? std::floor(rng.Uniform() * 5.0) / 5.0 : rng.Uniform();
      l[i] = rng.Uniform() < 0.4 ? 1 : 0;
    }
    l[0] = 1;
    l[1] = 0;
    CHECK(Auc(s, l) == PairAuc(s, l));
  }
}

TEST_CASE("AUC flips with labels and ignores monotone transforms") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 10 + rng.Index(40);
    std::vector<double> s(n), e(n), a(n);
    std::vector<int> l(n), flipped(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.Uniform();
      e[i] = std::exp(s[i]);
      a[i] = 3.0 * s[i] - 7.0;
      l[i] = i % 3 == 0 ? 1 : 0;
      flipped[i] = 1 - l[i];
    }
    const double auc = Auc(s, l);
    CHECK(Auc(s, flipped) == doctest::Approx(1.0 - auc).epsilon(1e-12));
    CHECK(Auc(e, l) == auc);
    CHECK(Auc(a, l) == auc);
  }
}

TEST_CASE("accuracy and confusion") {
  const auto perfect = AccuracyConfusion(std::vector<double>{.9, .6, .4, .1}, std::vector<int>{1, 1, 0, 0});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.confusion == Confusion{2, 0, 2, 0});
  const auto zeros = AccuracyConfusion(std::vector<double>(5, 0.0), std::vector<int>{1, 0, 0, 1, 0});
  CHECK(zeros.accuracy == doctest::Approx(0.6));
  CHECK(AccuracyConfusion(std::vector<double>{0.5}, std::vector<int>{1}).confusion.tp == 1);

  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.Index(50);
    std::vector<double> s(n);
    std::vector<int> l(n);
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::floor(rng.Uniform() * 4.0) / 4.0;
      l[i] = rng.Uniform() < 0.5 ? 1 : 0;
      if (s[i] >= 0.5) {
        (l[i] ? tp : fp)++;
      } else {
        (l[i] ? fn : tn)++;
      }
    }
    const auto r = AccuracyConfusion(s, l);
    CHECK(r.confusion == Confusion{tp, fp, tn, fn});
    CHECK(r.accuracy == static_cast<double>(tp + tn) / static_cast<double>(n));
  }
}

TEST_CASE("strata expand and filter") {
  const auto strata = ExpandStrata("gender,age50,environment");
  CHECK(strata == std::vector<std::string>{"male", "female", "age50", "home", "lab"});
  CHECK(KindOf([] { ExpandStrata("gender,shoe-size"); }) == ErrorKind::kInvalidArgument);

  // Males are ranked perfectly, females inverted.
  std::vector<RecordMeta> meta(8);
  std::vector<double> scores = {.9, .8, .2, .1, .1, .2, .8, .9};
  std::vector<int> labels = {1, 1, 0, 0, 1, 1, 0, 0};
  for (std::size_t i = 0; i < 8; ++i) {
    meta[i].gender = i < 4 ? Gender::kMale : Gender::kFemale;
    meta[i].age = i % 2 == 0 ? 55.0 : 30.0;
    meta[i].environment = i == 0 ? Environment::kLab : Environment::kHome;
  }
  const auto result = StratifiedEval(scores, labels, meta, strata);
  REQUIRE(result.size() == 5);
  CHECK(*result[0].metrics.auc == 1.0);
  CHECK(*result[1].metrics.auc == 0.0);
  CHECK(result[0].metrics.accuracy == 1.0);
  CHECK(result[1].metrics.accuracy == 0.0);
  // Ages 55 at even positions: males .9/.2, females .1/.8.
  CHECK(result[2].metrics.n == 4);
  CHECK(*result[2].metrics.auc == PairAuc({.9, .2, .1, .8}, {1, 0, 1, 0}));
  CHECK(result[3].metrics.n + result[4].metrics.n == 8);
  CHECK_FALSE(result[4].metrics.defined());
  CHECK(result[0].metrics.n + result[1].metrics.n == 8);

  for (auto& m : meta) m.gender = Gender::kMale;
  const auto all_male = StratifiedEval(scores, labels, meta, strata);
  CHECK(all_male[1].metrics.n == 0);
  CHECK_FALSE(all_male[1].metrics.defined());
  CHECK(*all_male[0].metrics.auc == Auc(scores, labels));
}

TEST_CASE("LOOCV fold counts") {
  auto four = RandomMatrix(4, 3, 4);
  const auto folds4 = Loocv(four, FastTrainer(), 1);
  CHECK(folds4.size() == 4);
  for (const auto& f : folds4) CHECK_FALSE(f.skipped);

  // With three rows the single minority row leaves a one-class training set.
  const auto three = RandomMatrix(3, 3, 5);
  const auto folds3 = Loocv(three, FastTrainer(), 1);
  REQUIRE(folds3.size() == 3);
  CHECK(folds3[1].skipped);
  CHECK(folds3[1].reason.rfind("FoldDegenerate", 0) == 0);
  CHECK_FALSE(folds3[0].skipped);
  CHECK_FALSE(folds3[2].skipped);
  const auto report = Evaluate(three, {FastTrainer(), 1, 1, {}});
  CHECK(report.scores.size() == 2);
  CHECK(report.skipped.size() == 1);
  CHECK(KindOf([] { Loocv(RandomMatrix(2, 3, 6), FastTrainer(), 1); }) == ErrorKind::kInvalidArgument);
}

TEST_CASE("LOOCV is deterministic and independent of thread count") {
  const auto m = Clusters(30, 1.0, 7);
  const auto a = Loocv(m, FastTrainer(), 11, 1);
  const auto b = Loocv(m, FastTrainer(), 11, 3);
  const auto c = Loocv(m, FastTrainer(), 12, 1);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].score == b[i].score);
    CHECK(a[i].model_fingerprint == b[i].model_fingerprint);
    any_difference = any_difference || a[i].model_fingerprint != c[i].model_fingerprint;
  }
  CHECK(any_difference);
}

TEST_CASE("LOOCV separates two clusters") {
  const auto m = Clusters(60, 3.0, 8);
  EvalOptions options;
  const auto report = Evaluate(m, options);
  CHECK(report.scores.size() == 60);
  CHECK(*report.overall.auc >= 0.95);
}

TEST_CASE("a held-out row never reaches its own fold") {
  auto m = Clusters(24, 1.5, 9);
  m.rows[5][2] = kMissing;
  const auto base = Loocv(m, FastTrainer(), 3);
  for (std::size_t i : {0, 7, 13}) {
    auto poisoned = m;
    for (auto& v : poisoned.rows[i]) v = 1e6;
    poisoned.rows[i][1] = kMissing;
    const auto fold = RunFold(poisoned, i, FastTrainer(), 3);
    CHECK(fold.model_fingerprint == base[i].model_fingerprint);
    CHECK(fold.score != base[i].score);
    // The same poison on a training row does change the model.
    const std::size_t other = (i + 1) % m.size();
    CHECK(RunFold(poisoned, other, FastTrainer(), 3).model_fingerprint != base[other].model_fingerprint);
  }
}

TEST_CASE("model fitting handles degenerate and tiny minorities") {
  auto single = RandomMatrix(10, 3, 10);
  for (auto& meta : single.meta) meta.label = Label::kNonPd;
  CHECK(KindOf([&] { FitModel(single, FastTrainer(), 1); }) == ErrorKind::kDegenerateLabels);
  single.meta[0].label = Label::kPd;
  const auto model = FitModel(single, FastTrainer(), 1);
  CHECK(model.preprocess.median.size() == 3);
  CHECK(std::isfinite(model.Score(single.rows[0])));
}

TEST_CASE("ablations") {
  auto m = Clusters(100, 2.0, 11);
  for (auto& meta : m.meta) meta.environment = Environment::kHome;
  EvalOptions options{FastTrainer(), 5, 1, {}};
  CHECK(KindOf([&] { AblateRemoveLab(m, options); }) == ErrorKind::kNoOp);

  const auto random = AblateRemoveRandom(m, options, 0.07, 10);
  REQUIRE(random.reports.size() == 10);
  double sum = 0.0;
  for (const auto& r : random.reports) {
    CHECK(r.scores.size() + r.skipped.size() == 93);
    sum += *r.overall.auc;
  }
  CHECK(*random.mean_auc == doctest::Approx(sum / 10.0).epsilon(1e-15));
  const bool runs_differ = random.reports[0].scores[0].id != random.reports[1].scores[0].id ||
                           random.reports[0].scores[5].id != random.reports[1].scores[5].id ||
                           random.reports[0].overall.auc != random.reports[1].overall.auc;
  CHECK(runs_differ);

  for (std::size_t r = 0; r < 12; ++r) m.meta[r].environment = Environment::kLab;
  const auto no_lab = AblateRemoveLab(m, options);
  CHECK(no_lab.reports.at(0).scores.size() == 88);
}

TEST_CASE("report JSON round trips and is reproducible") {
  const auto m = Clusters(20, 1.0, 12);
  EvalOptions options{FastTrainer(), 9, 1, ExpandStrata("gender,age,environment")};
  ReportBundle bundle;
  bundle.kind = "loocv";
  bundle.trainer = "boosted";
  bundle.config_fingerprint = HexDigest(Fnv1a64(TrainerConfigJson(options.trainer)));
  bundle.seed = 9;
  bundle.reports.push_back(Evaluate(m, options));
  const auto json = ReportToJson(bundle);
  CHECK(json.find("\"schema\": \"report/1\"") != std::string::npos);
  const auto back = ReportFromJson(json);
  CHECK(ReportToJson(back) == json);
  CHECK(back.reports[0].strata.size() == 5);
  CHECK(back.reports[0].scores[3].score == bundle.reports[0].scores[3].score);

  ReportBundle again = bundle;
  again.reports = {Evaluate(m, options)};
  CHECK(ReportToJson(again) == json);
  CHECK(KindOf([] { ReportFromJson(R"({"schema":"report/0"})"); }) == ErrorKind::kSchemaError);
}

TEST_CASE("trainer config JSON round trips") {
  TrainerConfig config;
  config.kind = EnsembleKind::kForest;
  config.forest.n_trees = 17;
  config.boost.learning_rate = 0.05;
  config.smote_k = 3;
  const auto json = TrainerConfigJson(config);
  CHECK(TrainerConfigJson(TrainerConfigFromJson(json)) == json);
}

TEST_CASE("results table layout") {
  CHECK(FormatTableRow("XGBoost", 0.750, 0.741) == "XGBoost | 0.750 | 0.741");
  CHECK(FormatTableRow(TrainerDisplayName(EnsembleKind::kForest), 0.745, 0.720) == "Random Forest | 0.745 | 0.720");
  ReportBundle bundle;
  bundle.trainer = "boosted";
  EvalReport report;
  report.name = "full";
  report.overall.auc = 0.750;
  report.overall.accuracy = 0.741;
  bundle.reports.push_back(report);
  CHECK(FormatResultsTable(bundle) == "Algorithm | AUC | Accuracy\nXGBoost | 0.750 | 0.741\n");
}
