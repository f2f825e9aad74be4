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
#include <cstring>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "voxscreen/dataset.hpp"

using namespace voxscreen;
using namespace voxscreen::testing;

namespace {

bool SameBits(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

bool SameMatrix(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.feature_names != b.feature_names || a.size() != b.size()) return false;
  for (std::size_t r = 0; r < a.size(); ++r) {
    const auto& ma = a.meta[r];
    const auto& mb = b.meta[r];
    if (ma.id != mb.id || ma.label != mb.label || ma.gender != mb.gender || ma.environment != mb.environment ||
        ma.country != mb.country || !SameBits(ma.age, mb.age)) {
      return false;
    }
    for (std::size_t f = 0; f < a.num_features(); ++f) {
      if (!SameBits(a.rows[r][f], b.rows[r][f])) return false;
    }
  }
  return true;
}

double MaxAbsCorrelation(const FeatureMatrix& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.num_features(); ++i) {
    for (std::size_t j = i + 1; j < m.num_features(); ++j) {
      worst = std::max(worst, std::abs(PairwiseCorrelation(m.Column(i), m.Column(j))));
    }
  }
  return worst;
}

ClassicFeatures SampleClassic() {
  ClassicFeatures c;
  c.pitch.mean = 148.0;
  c.pitch.median = 150.0;
  c.pitch.stddev = 12.0;
  c.jitter = {0.01, 0.008, 0.01, 6e-5, 0.005, 0.006, 0.015};
  c.shimmer = {0.05, 0.04, 0.05, 0.45, 0.02, 0.03, kMissing, 0.06};
  for (std::size_t k = 0; k < kNumMfcc; ++k) {
    c.mfcc.mean[k] = 1.0 + k;
    c.mfcc.variation[k] = 0.1 * k;
  }
  c.rel_band_power = {0.4, 0.3, 0.2, 0.1};
  c.hnr = 18.0;
  return c;
}

}  // namespace

TEST_CASE("canonical names have the expected sizes and order") {
  const auto& kept = FeatureNames();
  const auto& all = FeatureNames(true);
  CHECK(kept.size() == 44);
  CHECK(all.size() == 52);
  CHECK(std::set<std::string>(all.begin(), all.end()).size() == all.size());
  CHECK(kept.front() == "MedianPitch");
  CHECK(kept.back() == "PPE");
  for (const char* name : {"LocalAbsoluteJitter", "DdpJitter", "Apq11Shimmer", "DdaShimmer", "MeanMFCC12",
                           "VariationMFCC0", "RelBandPower3", "HNR"}) {
    CHECK(std::count(kept.begin(), kept.end(), name) == 1);
  }
  for (const char* name : {"LocalJitter", "RapJitter", "Apq3Shimmer"}) {
    CHECK(std::count(kept.begin(), kept.end(), name) == 0);
    CHECK(std::count(all.begin(), all.end(), name) == 1);
  }
  // The kept list is an order-preserving subsequence of the full list.
  CHECK(std::includes(all.begin(), all.end(), kept.begin(), kept.end(), [&](const auto& a, const auto& b) {
    return std::find(all.begin(), all.end(), a) < std::find(all.begin(), all.end(), b);
  }));
}

TEST_CASE("assembly is deterministic and keeps sentinels") {
  const auto classic = SampleClassic();
  const NonlinearFeatures nonlinear{0.4, 0.7, 0.2};
  const auto a = AssembleRow(classic, nonlinear);
  const auto b = AssembleRow(classic, nonlinear);
  REQUIRE(a.size() == FeatureNames().size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(SameBits(a[i], b[i]));
  const auto& names = FeatureNames();
  auto at = [&](const char* name) { return a[std::find(names.begin(), names.end(), name) - names.begin()]; };
  CHECK(IsMissing(at("Apq11Shimmer")));
  CHECK(at("MedianPitch") == 150.0);
  CHECK(at("DdpJitter") == 0.015);
  CHECK(at("MeanMFCC3") == 4.0);
  CHECK(at("RelBandPower1") == 0.3);
  CHECK(at("PPE") == 0.2);
  CHECK(AssembleRow(classic, nonlinear, true).size() == 52);
}

TEST_CASE("CSV round trip is exact including sentinels and metadata") {
  Rng rng(5);
  std::vector<std::vector<double>> rows(3, std::vector<double>(44));
  for (auto& row : rows) {
    for (auto& v : row) v = rng.Normal() * std::pow(10.0, rng.Uniform(-8.0, 8.0));
  }
  rows[0][3] = kMissing;
  rows[2][43] = kMissing;
  rows[1][0] = -0.0;
  auto m = MakeMatrix(rows);
  m.feature_names = FeatureNames();
  m.meta[0].id = "spk,1 \"quoted\"";
  m.meta[1].age = kMissing;
  m.meta[2].gender = Gender::kUnspecified;
  const auto text = WriteCsv(m);
  CHECK(text.rfind("id,label,gender,age,environment,country,MedianPitch,", 0) == 0);
  const auto back = ParseCsv(text);
  CHECK(SameMatrix(m, back));
  CHECK(WriteCsv(back) == text);
}

TEST_CASE("CSV schema and parse errors") {
  CHECK(KindOf([] { ParseCsv("id,gender,age,environment,country,f0\na,male,50,home,US,1\n"); }) ==
        ErrorKind::kSchemaError);
  CHECK(KindOf([] { ParseCsv("id,label,gender,age,environment,country,f0\na,PD,male,50,home,US,abc\n"); }) ==
        ErrorKind::kParseError);
  CHECK(KindOf([] { ParseCsv("id,label,gender,age,environment,country,f0\na,PD,male,50,home,US\n"); }) ==
        ErrorKind::kSchemaError);
  CHECK(KindOf([] { ParseCsv("id,label,gender,age,environment,country,f0\na,maybe,male,50,home,US,1\n"); }) ==
        ErrorKind::kParseError);
  CHECK(KindOf([] {
          ParseCsv("id,label,gender,age,environment,country,f0\na,PD,male,50,home,US,1\na,PD,male,50,home,US,2\n");
        }) == ErrorKind::kSchemaError);
  CHECK(KindOf([] { ParseCsv(""); }) == ErrorKind::kSchemaError);
}

TEST_CASE("empty cells load as missing and extra columns are accepted") {
  const auto m = ParseCsv(
      "id,label,gender,age,environment,country,HNR,emb0,emb1\r\n"
      "a,PD,female,,lab,US,,0.5,1e-3\r\n"
      "b,non-PD,male,61,home,other,12.5,-2,3\r\n");
  REQUIRE(m.size() == 2);
  CHECK(m.feature_names == std::vector<std::string>{"HNR", "emb0", "emb1"});
  CHECK(IsMissing(m.rows[0][0]));
  CHECK(IsMissing(m.meta[0].age));
  CHECK(m.meta[0].environment == Environment::kLab);
  CHECK(m.rows[0][2] == 1e-3);
  CHECK(m.meta[1].label == Label::kNonPd);
  CHECK(m.meta[1].age == 61.0);
}

TEST_CASE("pruning drops the later of a duplicated pair") {
  auto m = RandomMatrix(30, 3, 1);
  for (auto& row : m.rows) row[2] = row[0];
  const auto result = PruneCorrelated(m);
  CHECK(result.dropped == std::vector<std::string>{"f2"});
  CHECK(result.matrix.feature_names == std::vector<std::string>{"f0", "f1"});
}

TEST_CASE("pruning keeps weakly correlated random columns") {
  const auto m = RandomMatrix(200, 8, 2);
  REQUIRE(MaxAbsCorrelation(m) < 0.3);
  const auto result = PruneCorrelated(m);
  CHECK(result.dropped.empty());
  CHECK(result.matrix.feature_names == m.feature_names);
}

TEST_CASE("a correlated chain collapses to its first member") {
  Rng rng(3);
  std::vector<std::vector<double>> rows;
  for (int r = 0; r < 100; ++r) {
    const double a = rng.Normal();
    rows.push_back({a, a + 0.05 * rng.Normal(), a + 0.1 * rng.Normal(), rng.Normal()});
  }
  const auto m = MakeMatrix(rows);
  REQUIRE(std::abs(PairwiseCorrelation(m.Column(0), m.Column(1))) > 0.9);
  REQUIRE(std::abs(PairwiseCorrelation(m.Column(0), m.Column(2))) > 0.9);
  REQUIRE(std::abs(PairwiseCorrelation(m.Column(1), m.Column(2))) > 0.9);
  const auto result = PruneCorrelated(m);
  CHECK(result.matrix.feature_names == std::vector<std::string>{"f0", "f3"});
  CHECK(result.dropped == std::vector<std::string>{"f1", "f2"});
}

TEST_CASE("pruning bounds correlations and is idempotent") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    auto m = RandomMatrix(60, 12, seed);
    // Mix columns so that some pairs exceed the threshold.
    for (auto& row : m.rows) {
      for (std::size_t f = 1; f < row.size(); ++f) row[f] = rng.Uniform() * row[f - 1] + 0.3 * row[f];
      if (rng.Uniform() < 0.1) row[rng.Index(row.size())] = kMissing;
    }
    const auto once = PruneCorrelated(m);
    CHECK(MaxAbsCorrelation(once.matrix) <= 0.9);
    const auto twice = PruneCorrelated(once.matrix);
    CHECK(twice.dropped.empty());
    CHECK(SameMatrix(once.matrix, twice.matrix));
  }
}

TEST_CASE("constant columns are never dropped for correlation") {
  auto m = RandomMatrix(20, 3, 4);
  for (auto& row : m.rows) {
    row[1] = 7.0;
    row[2] = 7.0;
  }
  CHECK(PairwiseCorrelation(m.Column(1), m.Column(2)) == 0.0);
  CHECK(PruneCorrelated(m).dropped.empty());
}

TEST_CASE("SMOTE with two minority points stays on their segment") {
  std::vector<std::vector<double>> rows = {{1.0, 2.0, -1.0}, {3.0, -1.0, 4.0}};
  std::vector<int> labels = {1, 1};
  Rng rng(8);
  for (int r = 0; r < 10; ++r) {
    rows.push_back({rng.Normal(), rng.Normal(), rng.Normal()});
    labels.push_back(0);
  }
  const auto out = Smote(MakeMatrix(rows, labels), {1, 9});
  REQUIRE(out.size() == 20);
  const auto& p = rows[0];
  const auto& q = rows[1];
  for (std::size_t r = 12; r < out.size(); ++r) {
    CHECK(out.meta[r].synthetic);
    CHECK(out.meta[r].label == Label::kPd);
    const auto& x = out.rows[r];
    // Project onto q - p and measure the perpendicular residual.
    double dot = 0.0, len = 0.0;
    for (int f = 0; f < 3; ++f) {
      dot += (x[f] - p[f]) * (q[f] - p[f]);
      len += (q[f] - p[f]) * (q[f] - p[f]);
    }
    const double t = dot / len;
    CHECK(t >= 0.0);
    CHECK(t <= 1.0);
    double residual = 0.0;
    for (int f = 0; f < 3; ++f) residual += std::pow(x[f] - (p[f] + t * (q[f] - p[f])), 2);
    CHECK(std::sqrt(residual) <= 1e-9);
  }
}

TEST_CASE("SMOTE balances classes deterministically") {
  auto m = RandomMatrix(40, 5, 11);
  for (std::size_t r = 0; r < 40; ++r) m.meta[r].label = r < 10 ? Label::kPd : Label::kNonPd;
  m.rows[3][1] = kMissing;
  const auto out = Smote(m, {5, 77});
  const auto labels = out.Labels();
  CHECK(std::count(labels.begin(), labels.end(), 1) == 30);
  CHECK(std::count(labels.begin(), labels.end(), 0) == 30);
  CHECK_NOTHROW(out.Validate());
  // Originals are untouched, synthetic rows are complete.
  for (std::size_t r = 0; r < 40; ++r) {
    for (std::size_t f = 0; f < 5; ++f) CHECK(SameBits(out.rows[r][f], m.rows[r][f]));
    CHECK_FALSE(out.meta[r].synthetic);
  }
  for (std::size_t r = 40; r < 60; ++r) {
    for (double v : out.rows[r]) CHECK_FALSE(IsMissing(v));
  }
  CHECK(SameMatrix(out, Smote(m, {5, 77})));
  CHECK_FALSE(SameMatrix(out, Smote(m, {5, 78})));
}

TEST_CASE("SMOTE points lie between a minority point and a neighbour") {
  auto m = RandomMatrix(25, 4, 12);
  std::vector<std::size_t> minority;
  for (std::size_t r = 0; r < 25; ++r) {
    m.meta[r].label = r % 4 == 0 ? Label::kPd : Label::kNonPd;
    if (r % 4 == 0) minority.push_back(r);
  }
  const auto out = Smote(m, {3, 5});
  for (std::size_t r = 25; r < out.size(); ++r) {
    bool found = false;
    for (std::size_t a : minority) {
      for (std::size_t b : minority) {
        if (a == b) continue;
        const auto& p = m.rows[a];
        const auto& q = m.rows[b];
        const double t = (out.rows[r][0] - p[0]) / (q[0] - p[0]);
        if (t < 0.0 || t > 1.0) continue;
        bool on = true;
        for (std::size_t f = 0; f < 4; ++f) on = on && std::abs(p[f] + t * (q[f] - p[f]) - out.rows[r][f]) <= 1e-9;
        found = found || on;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("SMOTE leaves balanced data alone and rejects tiny minorities") {
  const auto balanced = RandomMatrix(10, 3, 13);
  CHECK(SameMatrix(Smote(balanced), balanced));
  auto tiny = RandomMatrix(10, 3, 14);
  for (std::size_t r = 0; r < 10; ++r) tiny.meta[r].label = r == 0 ? Label::kPd : Label::kNonPd;
  CHECK(KindOf([&] { Smote(tiny); }) == ErrorKind::kCannotOversample);
}

TEST_CASE("preprocessor imputes medians and standardizes") {
  std::vector<std::vector<double>> rows = {{1.0, kMissing}, {2.0, 4.0}, {6.0, 8.0}, {kMissing, kMissing}};
  const auto pre = Preprocessor::Fit(rows, 2);
  CHECK(pre.median[0] == 2.0);
  CHECK(pre.median[1] == 6.0);
  const auto imputed = pre.Impute(rows[3]);
  CHECK(imputed == std::vector<double>{2.0, 6.0});
  // Column 0 after imputation: 1, 2, 6, 2.
  CHECK(pre.mean[0] == doctest::Approx(2.75));
  CHECK(pre.scale[0] == doctest::Approx(std::sqrt((1.75 * 1.75 + 0.75 * 0.75 + 3.25 * 3.25 + 0.75 * 0.75) / 4)));
  const auto constant = Preprocessor::Fit(std::vector<std::vector<double>>{{3.0}, {3.0}}, 1);
  CHECK(constant.scale[0] == 1.0);
  CHECK(constant.Transform(std::vector<double>{3.0})[0] == 0.0);
}
