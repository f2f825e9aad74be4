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

#include "voxscreen/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "voxscreen/error.hpp"
#include "voxscreen/numeric.hpp"

namespace voxscreen {

using Json = nlohmann::ordered_json;

namespace {

template <typename T>
void Read(const Json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

Json ExtractJson(const ExtractConfig& c) {
  Json j;
  j["sample_rate"] = c.sample_rate;
  j["trim"] = c.trim;
  j["all_features"] = c.all_features;
  j["vad"] = {{"frame_seconds", c.vad.frame_seconds},
              {"hop_seconds", c.vad.hop_seconds},
              {"relative_threshold", c.vad.relative_threshold},
              {"absolute_floor", c.vad.absolute_floor}};
  j["pitch"] = {{"f0_floor", c.pitch.f0_floor},
                {"f0_ceil", c.pitch.f0_ceil},
                {"voicing_threshold", c.pitch.voicing_threshold},
                {"window_seconds", c.pitch.window_seconds},
                {"hop_seconds", c.pitch.hop_seconds},
                {"octave_cost", c.pitch.octave_cost}};
  j["mfcc"] = {{"frame_seconds", c.mfcc.frame_seconds}, {"hop_seconds", c.mfcc.hop_seconds},
               {"pre_emphasis", c.mfcc.pre_emphasis},   {"num_filters", c.mfcc.num_filters},
               {"low_hz", c.mfcc.low_hz},               {"high_hz", c.mfcc.high_hz},
               {"energy_floor", c.mfcc.energy_floor}};
  j["embed"] = {{"dimension", c.embed.dimension},
                {"delay", c.embed.delay},
                {"max_delay", c.embed.max_delay},
                {"radius_factor", c.embed.radius_factor},
                {"max_period", c.embed.max_period},
                {"max_excerpt_seconds", c.embed.max_excerpt_seconds}};
  j["dfa"] = {{"min_window", c.dfa.min_window},
              {"num_windows", c.dfa.num_windows},
              {"max_excerpt_seconds", c.dfa.max_excerpt_seconds}};
  j["ppe"] = {{"predictor_order", c.ppe.predictor_order},
              {"num_bins", c.ppe.num_bins},
              {"range_sigmas", c.ppe.range_sigmas},
              {"reference_hz", c.ppe.reference_hz},
              {"min_voiced_frames", c.ppe.min_voiced_frames}};
  return j;
}

void ExtractFromJson(const Json& j, ExtractConfig& c) {
  Read(j, "sample_rate", c.sample_rate);
  Read(j, "trim", c.trim);
  Read(j, "all_features", c.all_features);
  if (j.contains("vad")) {
    const auto& v = j.at("vad");
    Read(v, "frame_seconds", c.vad.frame_seconds);
    Read(v, "hop_seconds", c.vad.hop_seconds);
    Read(v, "relative_threshold", c.vad.relative_threshold);
    Read(v, "absolute_floor", c.vad.absolute_floor);
  }
  if (j.contains("pitch")) {
    const auto& p = j.at("pitch");
    Read(p, "f0_floor", c.pitch.f0_floor);
    Read(p, "f0_ceil", c.pitch.f0_ceil);
    Read(p, "voicing_threshold", c.pitch.voicing_threshold);
    Read(p, "window_seconds", c.pitch.window_seconds);
    Read(p, "hop_seconds", c.pitch.hop_seconds);
    Read(p, "octave_cost", c.pitch.octave_cost);
  }
  if (j.contains("mfcc")) {
    const auto& m = j.at("mfcc");
    Read(m, "frame_seconds", c.mfcc.frame_seconds);
    Read(m, "hop_seconds", c.mfcc.hop_seconds);
    Read(m, "pre_emphasis", c.mfcc.pre_emphasis);
    Read(m, "num_filters", c.mfcc.num_filters);
    Read(m, "low_hz", c.mfcc.low_hz);
    Read(m, "high_hz", c.mfcc.high_hz);
    Read(m, "energy_floor", c.mfcc.energy_floor);
  }
  if (j.contains("embed")) {
    const auto& e = j.at("embed");
    Read(e, "dimension", c.embed.dimension);
    Read(e, "delay", c.embed.delay);
    Read(e, "max_delay", c.embed.max_delay);
    Read(e, "radius_factor", c.embed.radius_factor);
    Read(e, "max_period", c.embed.max_period);
    Read(e, "max_excerpt_seconds", c.embed.max_excerpt_seconds);
  }
  if (j.contains("dfa")) {
    const auto& d = j.at("dfa");
    Read(d, "min_window", c.dfa.min_window);
    Read(d, "num_windows", c.dfa.num_windows);
    Read(d, "max_excerpt_seconds", c.dfa.max_excerpt_seconds);
  }
  if (j.contains("ppe")) {
    const auto& p = j.at("ppe");
    Read(p, "predictor_order", c.ppe.predictor_order);
    Read(p, "num_bins", c.ppe.num_bins);
    Read(p, "range_sigmas", c.ppe.range_sigmas);
    Read(p, "reference_hz", c.ppe.reference_hz);
    Read(p, "min_voiced_frames", c.ppe.min_voiced_frames);
  }
}

}  // namespace

std::string PipelineConfig::ToJson() const {
  Json j;
  j["extract"] = ExtractJson(extract);
  j["prune_threshold"] = prune_threshold;
  j["trainer"] = Json::parse(TrainerConfigJson(trainer));
  j["seed"] = seed;
  j["strata"] = strata;
  return j.dump(1) + "\n";
}

PipelineConfig PipelineConfig::FromJson(std::string_view text) {
  PipelineConfig config;
  try {
    const Json j = Json::parse(text);
    if (j.contains("extract")) ExtractFromJson(j.at("extract"), config.extract);
    Read(j, "prune_threshold", config.prune_threshold);
    if (j.contains("trainer")) config.trainer = TrainerConfigFromJson(j.at("trainer").dump());
    Read(j, "seed", config.seed);
    Read(j, "strata", config.strata);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("pipeline config: ") + e.what());
  }
  return config;
}

std::string PipelineConfig::Fingerprint() const { return HexDigest(Fnv1a64(ToJson())); }

Extraction ExtractFeatures(const AudioBuffer& audio, const ExtractConfig& config) {
  AudioBuffer a = audio.sample_rate == config.sample_rate ? audio : Resample(audio, config.sample_rate);
  if (config.trim) a = TrimEndpoints(a, config.vad).audio;
  if (a.samples.empty()) throw Error(ErrorKind::kEmptyAudio, "recording has no samples");

  const F0Track track = EstimateF0(a, config.pitch);
  if (track.VoicedCount() == 0) throw Error(ErrorKind::kNoVoicedSpeech, "no voiced frames");

  ClassicFeatures classic;
  NonlinearFeatures nonlinear;
  classic.pitch = ComputePitchStats(track);
  const PeriodMarks marks = ExtractPeriodMarks(a, track);
  // Each family degrades to missing cells on its own failure.
  auto guarded = [](auto&& compute, auto fallback) {
    try {
      return compute();
    } catch (const Error&) {
      return fallback;
    }
  };
  JitterFeatures missing_jitter{kMissing, kMissing, kMissing, kMissing, kMissing, kMissing, kMissing};
  ShimmerFeatures missing_shimmer{kMissing, kMissing, kMissing, kMissing, kMissing, kMissing, kMissing, kMissing};
  classic.jitter = guarded([&] { return ComputeJitter(marks); }, missing_jitter);
  classic.shimmer = guarded([&] { return ComputeShimmer(marks); }, missing_shimmer);
  MfccFeatures missing_mfcc;
  missing_mfcc.mean.fill(kMissing);
  missing_mfcc.variation.fill(kMissing);
  classic.mfcc = guarded([&] { return ComputeMfcc(a, config.mfcc); }, missing_mfcc);
  std::array<double, kNumBands> missing_bands;
  missing_bands.fill(kMissing);
  classic.rel_band_power = guarded([&] { return ComputeRelativeBandPower(a); }, missing_bands);
  classic.hnr = guarded([&] { return HarmonicsToNoise(track); }, kMissing);
  nonlinear.rpde = guarded([&] { return Rpde(a, config.embed); }, kMissing);
  nonlinear.dfa = guarded([&] { return Dfa(a, config.dfa); }, kMissing);
  nonlinear.ppe = guarded([&] { return Ppe(track, config.ppe); }, kMissing);

  Extraction out;
  out.row = AssembleRow(classic, nonlinear, config.all_features);
  const auto& names = FeatureNames(config.all_features);
  for (std::size_t f = 0; f < out.row.size(); ++f) {
    if (IsMissing(out.row[f])) out.missing.push_back(names[f]);
  }
  return out;
}

std::vector<ManifestEntry> ParseManifest(std::string_view text, const std::filesystem::path& base_dir) {
  const auto records = ParseCsvRecords(text);
  if (records.empty()) throw Error(ErrorKind::kInvalidArgument, "manifest is empty");
  const auto& header = records.front();
  auto column = [&](std::string_view name) -> long {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<long>(it - header.begin());
  };
  const long id_col = column("id"), path_col = column("path"), label_col = column("label");
  if (id_col < 0 || path_col < 0 || label_col < 0) {
    throw Error(ErrorKind::kSchemaError, "manifest needs id, path and label columns");
  }
  const long gender_col = column("gender"), age_col = column("age"), env_col = column("environment"),
             country_col = column("country");
  std::vector<ManifestEntry> entries;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw Error(ErrorKind::kSchemaError, "manifest record " + std::to_string(r) + " has the wrong field count");
    }
    ManifestEntry e;
    e.meta.id = rec[id_col];
    e.meta.label = ParseLabel(rec[label_col]);
    if (gender_col >= 0) e.meta.gender = ParseGender(rec[gender_col]);
    e.meta.age = kMissing;
    if (age_col >= 0 && !rec[age_col].empty()) {
      try {
        e.meta.age = std::stod(rec[age_col]);
      } catch (const std::exception&) {
        throw Error(ErrorKind::kParseError, "bad age '" + rec[age_col] + "' for " + e.meta.id);
      }
    }
    if (env_col >= 0) e.meta.environment = ParseEnvironment(rec[env_col]);
    if (country_col >= 0) e.meta.country = rec[country_col];
    const std::filesystem::path p = rec[path_col];
    e.path = p.is_absolute() ? p : base_dir / p;
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw Error(ErrorKind::kInvalidArgument, "manifest lists no recordings");
  return entries;
}

std::vector<ManifestEntry> LoadManifest(const std::filesystem::path& path) {
  return ParseManifest(ReadTextFile(path), path.parent_path());
}

std::string ManifestCsv(const std::vector<ManifestEntry>& entries) {
  std::string out = "id,path,label,gender,age,environment,country\n";
  for (const auto& e : entries) {
    out += CsvEscape(e.meta.id) + "," + CsvEscape(e.path.string()) + "," + std::string(LabelName(e.meta.label)) + "," +
           std::string(GenderName(e.meta.gender)) + "," + FormatDouble(e.meta.age) + "," +
           std::string(EnvironmentName(e.meta.environment)) + "," + CsvEscape(e.meta.country) + "\n";
  }
  return out;
}

ExtractSummary ExtractManifest(const std::vector<ManifestEntry>& entries, const ExtractConfig& config,
                               std::size_t jobs, const LogFn& log) {
  if (entries.empty()) throw Error(ErrorKind::kInvalidArgument, "manifest lists no recordings");
  const std::size_t n = entries.size();
  std::vector<Extraction> results(n);
  std::vector<std::string> errors(n);
  std::vector<char> ok(n, 0);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        auto audio = ReadWav(entries[i].path);
        results[i] = ExtractFeatures(audio, config);
        ok[i] = 1;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
      if (log) {
        std::lock_guard<std::mutex> lock(log_mutex);
        if (!ok[i]) {
          log("skip " + entries[i].meta.id + ": " + errors[i]);
        } else if (!results[i].missing.empty()) {
          std::string names;
          for (const auto& m : results[i].missing) names += (names.empty() ? "" : ",") + m;
          log("partial " + entries[i].meta.id + ": missing " + names);
        }
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
  ExtractSummary summary;
  summary.matrix.feature_names = FeatureNames(config.all_features);
  for (std::size_t i = 0; i < n; ++i) {
    if (ok[i]) {
      summary.matrix.rows.push_back(std::move(results[i].row));
      summary.matrix.meta.push_back(entries[i].meta);
    } else {
      summary.failures.push_back({entries[i].meta.id, errors[i]});
    }
  }
  summary.matrix.Validate();
  return summary;
}

AudioBuffer SynthesizeVoice(const VoiceParams& params, double sample_rate, std::uint64_t seed) {
  if (!(params.f0 > 0.0) || !(params.duration > 0.0) || params.padding < 0.0 || !(sample_rate > 0.0) ||
      params.jitter < 0.0 || params.shimmer < 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "invalid voice parameters");
  }
  Rng rng(seed);
  // E|z1 - z2| = 2 / sqrt(pi) for independent standard normals.
  const double spread = std::sqrt(M_PI) / 2.0;
  const double t0 = 1.0 / params.f0;
  const double width = 0.5 * t0;
  const double voiced_end = params.padding + params.duration;
  const auto total = static_cast<std::size_t>(std::llround((params.duration + 2.0 * params.padding) * sample_rate));
  AudioBuffer out;
  out.sample_rate = sample_rate;
  out.samples.assign(total, 0.0);
  double onset = params.padding;
  while (onset + width < voiced_end) {
    const double period = t0 * std::clamp(1.0 + params.jitter * spread * rng.Normal(), 0.5, 1.5);
    const double amplitude = std::max(0.1, 1.0 + params.shimmer * spread * rng.Normal());
    const auto first = static_cast<std::size_t>(std::ceil(onset * sample_rate));
    const auto last = std::min(total, static_cast<std::size_t>(std::floor((onset + width) * sample_rate)) + 1);
    for (std::size_t k = first; k < last; ++k) {
      const double u = (static_cast<double>(k) / sample_rate - onset) / width;
      if (u >= 0.0 && u <= 1.0) out.samples[k] += amplitude * std::pow(std::sin(M_PI * u), 2);
    }
    onset += period;
  }
  const auto v0 = static_cast<std::size_t>(std::llround(params.padding * sample_rate));
  const auto v1 = std::min(total, static_cast<std::size_t>(std::llround(voiced_end * sample_rate)));
  // The pulse train has a DC component; noise is scaled to its AC power.
  std::span<const double> voiced(out.samples.data() + v0, v1 - v0);
  const double mean = Mean(voiced);
  double power = 0.0;
  for (double v : voiced) power += (v - mean) * (v - mean);
  power /= static_cast<double>(voiced.size());
  const double sigma = std::sqrt(power / std::pow(10.0, params.snr_db / 10.0));
  for (std::size_t k = v0; k < v1; ++k) out.samples[k] += sigma * rng.Normal();
  double peak = 0.0;
  for (double v : out.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : out.samples) v *= 0.5 / peak;
  }
  return out;
}

namespace {

Json RangeJson(const Range& r) { return Json::array({r.lo, r.hi}); }

void ReadRange(const Json& j, const char* key, Range& r) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 2) throw Error(ErrorKind::kInvalidArgument, std::string("range ") + key + " needs two values");
  r = {v[0], v[1]};
}

Json ClassJson(const ClassSpec& c) {
  return {{"n", c.n},
          {"f0", RangeJson(c.f0)},
          {"jitter", RangeJson(c.jitter)},
          {"shimmer", RangeJson(c.shimmer)},
          {"snr_db", RangeJson(c.snr_db)}};
}

void ReadClass(const Json& j, ClassSpec& c) {
  Read(j, "n", c.n);
  ReadRange(j, "f0", c.f0);
  ReadRange(j, "jitter", c.jitter);
  ReadRange(j, "shimmer", c.shimmer);
  ReadRange(j, "snr_db", c.snr_db);
}

double Draw(Rng& rng, const Range& r) { return r.lo + (r.hi - r.lo) * rng.Uniform(); }

}  // namespace

std::string CohortSpec::ToJson() const {
  Json j;
  j["sample_rate"] = sample_rate;
  j["duration"] = duration;
  j["padding"] = padding;
  j["male_fraction"] = male_fraction;
  j["age"] = RangeJson(age);
  j["lab_fraction"] = lab_fraction;
  j["pd"] = ClassJson(pd);
  j["non_pd"] = ClassJson(non_pd);
  return j.dump(1) + "\n";
}

CohortSpec CohortSpec::FromJson(std::string_view text) {
  CohortSpec spec;
  try {
    const Json j = Json::parse(text);
    Read(j, "sample_rate", spec.sample_rate);
    Read(j, "duration", spec.duration);
    Read(j, "padding", spec.padding);
    Read(j, "male_fraction", spec.male_fraction);
    ReadRange(j, "age", spec.age);
    Read(j, "lab_fraction", spec.lab_fraction);
    if (j.contains("pd")) ReadClass(j.at("pd"), spec.pd);
    if (j.contains("non_pd")) ReadClass(j.at("non_pd"), spec.non_pd);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("cohort spec: ") + e.what());
  }
  spec.Validate();
  return spec;
}

void CohortSpec::Validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::kInvalidArgument, "cohort spec: " + what); };
  if (!(sample_rate > 0.0) || !(duration > 0.0) || padding < 0.0) bad("rate, duration and padding must be positive");
  if (male_fraction < 0.0 || male_fraction > 1.0 || lab_fraction < 0.0 || lab_fraction > 1.0) {
    bad("fractions must lie in [0, 1]");
  }
  if (age.lo > age.hi || age.lo < 0.0) bad("invalid age range");
  for (const auto* c : {&pd, &non_pd}) {
    if (c->n == 0) bad("each class needs at least one recording");
    for (const auto* r : {&c->f0, &c->jitter, &c->shimmer, &c->snr_db}) {
      if (r->lo > r->hi) bad("inverted range");
    }
    if (!(c->f0.lo > 0.0) || c->jitter.lo < 0.0 || c->shimmer.lo < 0.0) bad("negative signal parameter");
  }
}

std::vector<SynthRecord> PlanCohort(const CohortSpec& spec, std::uint64_t seed) {
  spec.Validate();
  Rng rng(DeriveSeed(seed, 0x5e7));
  std::vector<SynthRecord> records;
  for (int cls = 0; cls < 2; ++cls) {
    const ClassSpec& c = cls == 0 ? spec.pd : spec.non_pd;
    for (std::size_t i = 0; i < c.n; ++i) {
      SynthRecord rec;
      char id[32];
      std::snprintf(id, sizeof(id), "%s%03zu", cls == 0 ? "pd" : "hc", i);
      rec.entry.meta.id = id;
      rec.entry.meta.label = cls == 0 ? Label::kPd : Label::kNonPd;
      rec.entry.meta.gender = rng.Uniform() < spec.male_fraction ? Gender::kMale : Gender::kFemale;
      rec.entry.meta.age = std::round(Draw(rng, spec.age));
      rec.entry.meta.environment = rng.Uniform() < spec.lab_fraction ? Environment::kLab : Environment::kHome;
      rec.entry.meta.country = rng.Uniform() < 0.5 ? "US" : "other";
      rec.entry.path = std::string(id) + ".wav";
      rec.params.f0 = Draw(rng, c.f0);
      rec.params.jitter = Draw(rng, c.jitter);
      rec.params.shimmer = Draw(rng, c.shimmer);
      rec.params.snr_db = Draw(rng, c.snr_db);
      rec.params.duration = spec.duration;
      rec.params.padding = spec.padding;
      records.push_back(std::move(rec));
    }
  }
  return records;
}

std::string ExpectedSheetCsv(const std::vector<SynthRecord>& records) {
  std::string out = "id,label,f0_hz,local_jitter,local_shimmer,snr_db\n";
  for (const auto& r : records) {
    const auto& p = r.params;
    out += r.entry.meta.id + "," + std::string(LabelName(r.entry.meta.label)) + "," + FormatDouble(p.f0) + "," +
           FormatDouble(p.jitter) + "," + FormatDouble(p.shimmer) + "," + FormatDouble(p.snr_db) + "\n";
  }
  return out;
}

std::vector<SynthRecord> WriteCohort(const CohortSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir) {
  auto records = PlanCohort(spec, seed);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::kIoError, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto audio = SynthesizeVoice(records[i].params, spec.sample_rate, DeriveSeed(seed, i));
    audio.source_id = records[i].entry.meta.id;
    WriteWav(out_dir / records[i].entry.path, audio, WavEncoding::kFloat32);
    entries.push_back(records[i].entry);
  }
  WriteTextFile(out_dir / "manifest.csv", ManifestCsv(entries));
  WriteTextFile(out_dir / "expected.csv", ExpectedSheetCsv(records));
  return records;
}

}  // namespace voxscreen
