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
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "voxscreen/audio.hpp"
#include "voxscreen/dataset.hpp"
#include "voxscreen/eval.hpp"
#include "voxscreen/features.hpp"
#include "voxscreen/nonlinear.hpp"
#include "voxscreen/pitch.hpp"

namespace voxscreen {

struct ExtractConfig {
  double sample_rate = kAnalysisSampleRate;
  bool trim = true;
  bool all_features = false;
  VadConfig vad;
  PitchConfig pitch;
  MfccConfig mfcc;
  EmbedConfig embed;
  DfaConfig dfa;
  PpeConfig ppe;
};

// Settings for every stage. Serialized and hashed into each output.
struct PipelineConfig {
  ExtractConfig extract;
  double prune_threshold = 0.9;
  TrainerConfig trainer;
  std::uint64_t seed = 42;
  std::vector<std::string> strata;

  std::string ToJson() const;
  // Fields absent from the JSON keep their defaults.
  static PipelineConfig FromJson(std::string_view text);
  std::string Fingerprint() const;
};

struct Extraction {
  std::vector<double> row;
  // Names of features that could not be computed and were left missing.
  std::vector<std::string> missing;
};

// Resamples, trims and measures one recording. Recording-level failures
// (too short, no voiced speech) throw; a failing feature family only leaves
// its cells missing.
Extraction ExtractFeatures(const AudioBuffer& audio, const ExtractConfig& config = {});

struct ManifestEntry {
  RecordMeta meta;
  std::filesystem::path path;
};

// CSV with id, path and label columns plus optional gender, age,
// environment and country. Relative paths resolve against the manifest's
// directory. Throws when the manifest lists no recordings.
std::vector<ManifestEntry> LoadManifest(const std::filesystem::path& path);
std::vector<ManifestEntry> ParseManifest(std::string_view text, const std::filesystem::path& base_dir);
std::string ManifestCsv(const std::vector<ManifestEntry>& entries);

struct ExtractFailure {
  std::string id;
  std::string reason;
};

struct ExtractSummary {
  FeatureMatrix matrix;
  std::vector<ExtractFailure> failures;
};

using LogFn = std::function<void(const std::string&)>;

// Files are processed on up to jobs threads; rows keep manifest order.
ExtractSummary ExtractManifest(const std::vector<ManifestEntry>& entries, const ExtractConfig& config,
                               std::size_t jobs = 1, const LogFn& log = {});

// Synthetic voice: a train of Hann pulses, half a nominal period wide.
// Successive periods and amplitudes are independent draws scaled so that
// the expected local jitter and shimmer equal the programmed fractions.
struct VoiceParams {
  double f0 = 150.0;
  double jitter = 0.0;
  double shimmer = 0.0;
  double snr_db = 40.0;
  double duration = 2.0;
  // Silence before and after the voiced part.
  double padding = 0.25;
};

AudioBuffer SynthesizeVoice(const VoiceParams& params, double sample_rate, std::uint64_t seed);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct ClassSpec {
  std::size_t n = 30;
  Range f0;
  Range jitter;
  Range shimmer;
  Range snr_db;
};

struct CohortSpec {
  double sample_rate = kAnalysisSampleRate;
  double duration = 2.0;
  double padding = 0.25;
  double male_fraction = 0.5;
  Range age{40.0, 80.0};
  double lab_fraction = 0.1;
  ClassSpec pd{30, {110.0, 180.0}, {0.01, 0.03}, {0.04, 0.09}, {25.0, 40.0}};
  ClassSpec non_pd{30, {120.0, 200.0}, {0.002, 0.014}, {0.01, 0.05}, {25.0, 40.0}};

  // Fields absent from the JSON keep their defaults. Throws on a class with
  // n == 0 or an inverted range.
  static CohortSpec FromJson(std::string_view text);
  std::string ToJson() const;
  void Validate() const;
};

struct SynthRecord {
  ManifestEntry entry;
  VoiceParams params;
};

// Draws per-recording parameters and metadata; deterministic in seed.
std::vector<SynthRecord> PlanCohort(const CohortSpec& spec, std::uint64_t seed);
// Writes <id>.wav files, manifest.csv and expected.csv into out_dir.
std::vector<SynthRecord> WriteCohort(const CohortSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir);
std::string ExpectedSheetCsv(const std::vector<SynthRecord>& records);

}  // namespace voxscreen
