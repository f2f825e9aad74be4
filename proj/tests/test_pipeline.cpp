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
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "signals.hpp"
#include "voxscreen/features.hpp"
#include "voxscreen/pipeline.hpp"

using namespace voxscreen;
using namespace voxscreen::testing;

namespace {

namespace fs = std::filesystem;

struct Measured {
  double jitter = 0.0;
  double shimmer = 0.0;
};

Measured MeasureVoice(const VoiceParams& params, std::uint64_t seed) {
  const auto audio = TrimEndpoints(SynthesizeVoice(params, 16000.0, seed)).audio;
  const auto marks = ExtractPeriodMarks(audio, EstimateF0(audio));
  return {ComputeJitter(marks).local, ComputeShimmer(marks).local};
}

fs::path ScratchDir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("voxscreen_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("synthetic voice has padding, voiced span and peak 0.5") {
  VoiceParams p;
  p.duration = 1.0;
  p.padding = 0.25;
  const auto a = SynthesizeVoice(p, 16000.0, 3);
  CHECK(a.samples.size() == 24000);
  double peak = 0.0;
  for (double v : a.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak == doctest::Approx(0.5).epsilon(1e-12));
  for (std::size_t i = 0; i < 4000; ++i) {
    CHECK(a.samples[i] == 0.0);
    CHECK(a.samples[a.samples.size() - 1 - i] == 0.0);
  }
  const auto b = SynthesizeVoice(p, 16000.0, 3);
  CHECK(a.samples == b.samples);
  p.f0 = 0.0;
  CHECK(KindOf([&] { SynthesizeVoice(p, 16000.0, 1); }) == ErrorKind::kInvalidArgument);
}

TEST_CASE("programmed jitter and shimmer are measured back") {
  for (double jitter : {0.0, 0.01, 0.03}) {
    for (double shimmer : {0.0, 0.02, 0.05}) {
      VoiceParams p;
      p.jitter = jitter;
      p.shimmer = shimmer;
      p.snr_db = 50.0;
      const auto m = MeasureVoice(p, 11);
      CAPTURE(jitter);
      CAPTURE(shimmer);
      if (jitter == 0.0) {
        CHECK(m.jitter <= 0.005);
      } else {
        CHECK(std::abs(m.jitter - jitter) <= 0.25 * jitter);
      }
      if (shimmer == 0.0) {
        CHECK(m.shimmer <= 0.005);
      } else {
        CHECK(std::abs(m.shimmer - shimmer) <= 0.25 * shimmer);
      }
    }
  }
}

TEST_CASE("extracted rows follow the feature schema") {
  VoiceParams p;
  p.jitter = 0.01;
  p.shimmer = 0.03;
  const auto audio = SynthesizeVoice(p, 16000.0, 5);
  const auto e = ExtractFeatures(audio);
  REQUIRE(e.row.size() == FeatureNames(false).size());
  CHECK(e.missing.empty());
  for (double v : e.row) CHECK(std::isfinite(v));

  ExtractConfig all;
  all.all_features = true;
  CHECK(ExtractFeatures(audio, all).row.size() == FeatureNames(true).size());

  // Resampled input lands on the same schema.
  auto a44 = SynthesizeVoice(p, 44100.0, 5);
  CHECK(ExtractFeatures(a44).row.size() == e.row.size());
}

TEST_CASE("silent or unvoiced recordings fail at recording level") {
  auto silence = MakeBuffer(std::vector<double>(16000, 0.0));
  CHECK(KindOf([&] { ExtractFeatures(silence); }).has_value());
  Rng rng(4);
  std::vector<double> noise(16000);
  for (auto& v : noise) v = 0.3 * rng.Normal();
  CHECK(KindOf([&] { ExtractFeatures(MakeBuffer(noise)); }).has_value());
}

TEST_CASE("manifest parsing resolves paths and reads metadata") {
  const auto entries = ParseManifest(
      "id,path,label,gender,age,environment,country\n"
      "a,a.wav,PD,male,61,lab,US\n"
      "b,/abs/b.wav,non-PD,,,home,\n",
      "/data");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].path == fs::path("/data/a.wav"));
  CHECK(entries[1].path == fs::path("/abs/b.wav"));
  CHECK(entries[0].meta.label == Label::kPd);
  CHECK(entries[0].meta.gender == Gender::kMale);
  CHECK(entries[0].meta.age == 61.0);
  CHECK(entries[0].meta.environment == Environment::kLab);
  CHECK(entries[1].meta.gender == Gender::kUnspecified);
  CHECK(IsMissing(entries[1].meta.age));

  const auto minimal = ParseManifest("id,path,label\nx,x.wav,1\n", "");
  CHECK(minimal.size() == 1);
  CHECK(minimal[0].meta.label == Label::kPd);

  const auto again = ParseManifest(ManifestCsv(entries), "/elsewhere");
  CHECK(again[0].path == entries[0].path);
  CHECK(again[1].meta.country == "");
}

TEST_CASE("manifest errors") {
  CHECK(KindOf([] { ParseManifest("", "."); }) == ErrorKind::kInvalidArgument);
  CHECK(KindOf([] { ParseManifest("id,path,label\n", "."); }) == ErrorKind::kInvalidArgument);
  CHECK(KindOf([] { ParseManifest("id,path\na,a.wav\n", "."); }) == ErrorKind::kSchemaError);
  CHECK(KindOf([] { ParseManifest("id,path,label\na,a.wav\n", "."); }) == ErrorKind::kSchemaError);
  CHECK(KindOf([] { ParseManifest("id,path,label\na,a.wav,maybe\n", "."); }).has_value());
  CHECK(KindOf([] { ParseManifest("id,path,label,age\na,a.wav,PD,old\n", "."); }) == ErrorKind::kParseError);
  CHECK(KindOf([] { ExtractManifest({}, ExtractConfig{}); }) == ErrorKind::kInvalidArgument);
}

TEST_CASE("manifest extraction keeps order and skips unreadable files") {
  const auto dir = ScratchDir("extract");
  std::string manifest = "id,path,label\n";
  for (int i = 0; i < 3; ++i) {
    VoiceParams p;
    p.f0 = 120.0 + 30.0 * i;
    p.duration = 1.0;
    const std::string id = "v" + std::to_string(i);
    WriteWav(dir / (id + ".wav"), SynthesizeVoice(p, 16000.0, i), WavEncoding::kPcm16);
    manifest += id + "," + id + ".wav," + (i % 2 ? "PD" : "non-PD") + "\n";
  }
  WriteTextFile(dir / "broken.wav", "RIFF not really");
  manifest += "broken,broken.wav,PD\nabsent,absent.wav,PD\n";
  WriteTextFile(dir / "manifest.csv", manifest);

  std::vector<std::string> log;
  const auto entries = LoadManifest(dir / "manifest.csv");
  const auto summary = ExtractManifest(entries, ExtractConfig{}, 1, [&](const std::string& s) { log.push_back(s); });
  REQUIRE(summary.matrix.rows.size() == 3);
  CHECK(summary.matrix.feature_names.size() == FeatureNames(false).size());
  CHECK(summary.matrix.meta[0].id == "v0");
  CHECK(summary.matrix.meta[2].id == "v2");
  REQUIRE(summary.failures.size() == 2);
  CHECK(summary.failures[0].id == "broken");
  CHECK(summary.failures[1].id == "absent");
  CHECK(std::count_if(log.begin(), log.end(), [](const std::string& s) { return s.rfind("skip ", 0) == 0; }) == 2);

  const auto threaded = ExtractManifest(entries, ExtractConfig{}, 3);
  CHECK(WriteCsv(threaded.matrix) == WriteCsv(summary.matrix));
  fs::remove_all(dir);
}

TEST_CASE("cohort spec json and validation") {
  CohortSpec spec;
  const auto text = spec.ToJson();
  CHECK(CohortSpec::FromJson(text).ToJson() == text);
  const auto partial = CohortSpec::FromJson(R"({"pd": {"n": 4}, "duration": 1.5})");
  CHECK(partial.pd.n == 4);
  CHECK(partial.non_pd.n == spec.non_pd.n);
  CHECK(partial.duration == 1.5);
  CHECK(KindOf([] { CohortSpec::FromJson(R"({"pd": {"n": 0}})"); }) == ErrorKind::kInvalidArgument);
  CHECK(KindOf([] { CohortSpec::FromJson(R"({"non_pd": {"jitter": [0.2, 0.1]}})"); }) ==
        ErrorKind::kInvalidArgument);
  CHECK(KindOf([] { CohortSpec::FromJson("{"); }).has_value());
}

TEST_CASE("cohort plans are deterministic and balanced") {
  CohortSpec spec;
  spec.pd.n = 5;
  spec.non_pd.n = 7;
  const auto a = PlanCohort(spec, 9);
  const auto b = PlanCohort(spec, 9);
  const auto c = PlanCohort(spec, 10);
  REQUIRE(a.size() == 12);
  CHECK(ExpectedSheetCsv(a) == ExpectedSheetCsv(b));
  CHECK(ExpectedSheetCsv(a) != ExpectedSheetCsv(c));
  CHECK(a[0].entry.meta.id == "pd000");
  CHECK(a[5].entry.meta.id == "hc000");
  for (const auto& r : a) {
    const auto& cls = r.entry.meta.label == Label::kPd ? spec.pd : spec.non_pd;
    CHECK(r.params.jitter >= cls.jitter.lo);
    CHECK(r.params.jitter <= cls.jitter.hi);
    CHECK(r.params.f0 >= cls.f0.lo);
    CHECK(r.params.f0 <= cls.f0.hi);
  }
}

TEST_CASE("written cohorts load back through the manifest") {
  const auto dir = ScratchDir("cohort");
  CohortSpec spec;
  spec.pd.n = 2;
  spec.non_pd.n = 2;
  spec.duration = 1.0;
  const auto records = WriteCohort(spec, 42, dir);
  const auto entries = LoadManifest(dir / "manifest.csv");
  REQUIRE(entries.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(entries[i].meta.id == records[i].entry.meta.id);
    CHECK(fs::exists(entries[i].path));
  }
  CHECK(ReadTextFile(dir / "expected.csv") == ExpectedSheetCsv(records));
  const auto wav = ReadWav(entries[0].path);
  auto expected = SynthesizeVoice(records[0].params, spec.sample_rate, DeriveSeed(42, 0)).samples;
  for (auto& v : expected) v = static_cast<float>(v);
  CHECK(wav.samples == expected);
  fs::remove_all(dir);
}

TEST_CASE("pipeline config json round trip and fingerprint") {
  PipelineConfig config;
  const auto text = config.ToJson();
  CHECK(PipelineConfig::FromJson(text).ToJson() == text);
  CHECK(PipelineConfig::FromJson(text).Fingerprint() == config.Fingerprint());
  const auto changed = PipelineConfig::FromJson(R"({"seed": 7, "prune_threshold": 0.8})");
  CHECK(changed.seed == 7);
  CHECK(changed.prune_threshold == 0.8);
  CHECK(changed.Fingerprint() != config.Fingerprint());
  CHECK(KindOf([] { PipelineConfig::FromJson("[1"); }) == ErrorKind::kParseError);
}
