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

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "voxscreen/dataset.hpp"
#include "voxscreen/error.hpp"
#include "voxscreen/eval.hpp"
#include "voxscreen/explain.hpp"
#include "voxscreen/learn.hpp"
#include "voxscreen/numeric.hpp"
#include "voxscreen/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace voxscreen;
using Json = nlohmann::ordered_json;

// Values of the shared flags; unset options leave the config file's value.
struct CommonFlags {
  std::string config_path;
  std::optional<double> sample_rate;
  std::optional<double> f0_floor;
  std::optional<double> f0_ceil;
  std::optional<double> voicing_threshold;
  bool all_features = false;
  std::optional<double> threshold;
  std::optional<std::size_t> smote_k;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> trainer;
  std::optional<std::string> strata;
  std::size_t jobs = 1;
};

void AddCommonFlags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--sample-rate", f.sample_rate, "Analysis sample rate in Hz");
  cmd->add_option("--f0-floor", f.f0_floor, "Lowest F0 candidate in Hz");
  cmd->add_option("--f0-ceil", f.f0_ceil, "Highest F0 candidate in Hz");
  cmd->add_option("--voicing-threshold", f.voicing_threshold, "Voicing threshold on normalized autocorrelation");
  cmd->add_flag("--all-features", f.all_features, "Emit the extended feature schema");
  cmd->add_option("--threshold", f.threshold, "Correlation pruning threshold");
  cmd->add_option("--smote-k", f.smote_k, "SMOTE neighbour count");
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--trainer", f.trainer, "boosted or forest");
  cmd->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

PipelineConfig EffectiveConfig(const CommonFlags& f) {
  PipelineConfig c = f.config_path.empty() ? PipelineConfig{} : PipelineConfig::FromJson(ReadTextFile(f.config_path));
  if (f.sample_rate) c.extract.sample_rate = *f.sample_rate;
  if (f.f0_floor) c.extract.pitch.f0_floor = *f.f0_floor;
  if (f.f0_ceil) c.extract.pitch.f0_ceil = *f.f0_ceil;
  if (f.voicing_threshold) c.extract.pitch.voicing_threshold = *f.voicing_threshold;
  if (f.all_features) c.extract.all_features = true;
  if (f.threshold) c.prune_threshold = *f.threshold;
  if (f.smote_k) c.trainer.smote_k = *f.smote_k;
  if (f.seed) c.seed = *f.seed;
  if (f.trainer) c.trainer.kind = ParseEnsembleKind(*f.trainer);
  if (f.strata) c.strata = ExpandStrata(*f.strata);
  if (!(c.prune_threshold > 0.0 && c.prune_threshold <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "threshold must lie in (0, 1]");
  }
  return c;
}

EvalOptions OptionsFor(const PipelineConfig& c, std::size_t jobs) {
  EvalOptions o;
  o.trainer = c.trainer;
  o.seed = c.seed;
  o.jobs = jobs;
  o.strata = c.strata;
  return o;
}

void Log(const std::string& line) { std::cerr << line << "\n"; }

FeatureMatrix LoadPruned(const std::string& path, const PipelineConfig& c) {
  auto pruned = PruneCorrelated(LoadCsv(path), c.prune_threshold);
  if (!pruned.dropped.empty()) {
    std::string names;
    for (const auto& d : pruned.dropped) names += (names.empty() ? "" : ",") + d;
    Log("pruned " + std::to_string(pruned.dropped.size()) + ": " + names);
  }
  return std::move(pruned.matrix);
}

void StampBundle(ReportBundle& bundle, const PipelineConfig& c) {
  bundle.config_fingerprint = c.Fingerprint();
  bundle.seed = c.seed;
}

// Meta sheet without a path column: each id maps to <audio-dir>/<id>.wav.
std::vector<ManifestEntry> EntriesFromAudioDir(const fs::path& dir, const fs::path& meta) {
  auto records = ParseCsvRecords(ReadTextFile(meta));
  if (records.empty()) throw Error(ErrorKind::kInvalidArgument, "metadata sheet is empty");
  const auto& header = records.front();
  if (std::find(header.begin(), header.end(), "path") != header.end()) return ParseManifest(ReadTextFile(meta), dir);
  const auto id_it = std::find(header.begin(), header.end(), "id");
  if (id_it == header.end()) throw Error(ErrorKind::kSchemaError, "metadata sheet needs an id column");
  const auto id_col = static_cast<std::size_t>(id_it - header.begin());
  std::string text = "path";
  for (const auto& h : header) text += "," + CsvEscape(h);
  text += "\n";
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    text += CsvEscape(id_col < rec.size() ? rec[id_col] + ".wav" : std::string());
    for (const auto& v : rec) text += "," + CsvEscape(v);
    text += "\n";
  }
  return ParseManifest(text, dir);
}

int RunSynth(const std::string& spec_path, const std::string& out_dir, std::uint64_t seed,
             std::optional<std::size_t> per_class) {
  CohortSpec spec = spec_path.empty() ? CohortSpec{} : CohortSpec::FromJson(ReadTextFile(spec_path));
  if (per_class) spec.pd.n = spec.non_pd.n = *per_class;
  const auto records = WriteCohort(spec, seed, out_dir);
  Json j;
  j["schema"] = "cohort/1";
  j["seed"] = seed;
  j["config_fingerprint"] = HexDigest(Fnv1a64(spec.ToJson()));
  j["spec"] = Json::parse(spec.ToJson());
  WriteTextFile(fs::path(out_dir) / "cohort.json", j.dump(1) + "\n");
  Log("wrote " + std::to_string(records.size()) + " recordings to " + out_dir);
  return 0;
}

int RunExtract(const CommonFlags& f, const std::string& manifest, const std::string& audio_dir,
               const std::string& meta, const std::string& out) {
  const auto c = EffectiveConfig(f);
  const auto entries = manifest.empty() ? EntriesFromAudioDir(audio_dir, meta) : LoadManifest(manifest);
  const auto summary = ExtractManifest(entries, c.extract, f.jobs, Log);
  if (summary.matrix.rows.empty()) {
    Log("every recording failed");
    return 1;
  }
  SaveCsv(summary.matrix, out);
  Json j;
  j["schema"] = "extract/1";
  j["config_fingerprint"] = c.Fingerprint();
  j["seed"] = c.seed;
  j["config"] = Json::parse(c.ToJson());
  j["rows"] = summary.matrix.rows.size();
  j["failures"] = Json::array();
  for (const auto& fail : summary.failures) j["failures"].push_back({{"id", fail.id}, {"reason", fail.reason}});
  WriteTextFile(out + ".json", j.dump(1) + "\n");
  Log("extracted " + std::to_string(summary.matrix.rows.size()) + " of " + std::to_string(entries.size()));
  return 0;
}

int RunTrain(const CommonFlags& f, const std::string& features, const std::string& out) {
  const auto c = EffectiveConfig(f);
  auto model = FitModel(LoadPruned(features, c), c.trainer, c.seed);
  model.config_fingerprint = c.Fingerprint();
  WriteTextFile(out, model.ToJson());
  return 0;
}

int RunEval(const CommonFlags& f, const std::string& features, const std::string& out) {
  const auto c = EffectiveConfig(f);
  const auto opts = OptionsFor(c, f.jobs);
  ReportBundle bundle;
  bundle.kind = "loocv";
  bundle.trainer = EnsembleKindName(c.trainer.kind);
  StampBundle(bundle, c);
  bundle.reports.push_back(Evaluate(LoadPruned(features, c), opts));
  for (const auto& s : bundle.reports.front().skipped) Log("fold " + s.id + " skipped: " + s.reason);
  if (!out.empty()) WriteTextFile(out, ReportToJson(bundle));
  std::cout << FormatResultsTable(bundle);
  return 0;
}

int RunExplain(const CommonFlags& f, const std::string& features, const std::string& model_path,
               const std::string& out_dir, std::size_t max_k) {
  const auto c = EffectiveConfig(f);
  FeatureMatrix m = LoadCsv(features);
  TreeEnsemble model;
  if (model_path.empty()) {
    m = PruneCorrelated(m, c.prune_threshold).matrix;
    model = FitModel(m, c.trainer, c.seed);
    model.config_fingerprint = c.Fingerprint();
  } else {
    model = TreeEnsemble::FromJson(ReadTextFile(model_path));
    m = m.SelectFeatures(model.feature_names);
  }
  const auto attributions = ExplainMatrix(model, m);
  const auto ranking = GlobalImportance(attributions, model.feature_names);
  const auto curve = ShapValidationCurve(m, ranking, OptionsFor(c, f.jobs), max_k);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  WriteTextFile(dir / "attributions.csv", AttributionsCsv(attributions, model.feature_names));
  WriteTextFile(dir / "importance.json", ImportanceJson(ranking, model.config_fingerprint, model.seed));
  WriteTextFile(dir / "curve.json", CurveJson(curve, c.Fingerprint(), c.seed));
  WriteTextFile(dir / "curve.tsv", CurveTsv(curve));
  for (std::size_t i = 0; i < std::min<std::size_t>(5, ranking.size()); ++i) {
    std::printf("%zu\t%s\t%.6f\n", i + 1, ranking[i].feature.c_str(), ranking[i].mean_abs_phi);
  }
  return 0;
}

int RunAblate(const CommonFlags& f, const std::string& mode, const std::string& features, const std::string& out,
              double fraction, std::size_t runs) {
  const auto c = EffectiveConfig(f);
  const auto opts = OptionsFor(c, f.jobs);
  const auto m = LoadPruned(features, c);
  ReportBundle bundle =
      mode == "remove-lab" ? AblateRemoveLab(m, opts) : AblateRemoveRandom(m, opts, fraction, runs);
  StampBundle(bundle, c);
  if (!out.empty()) WriteTextFile(out, ReportToJson(bundle));
  std::cout << FormatResultsTable(bundle);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voice screening: feature extraction, tree ensembles, LOOCV and SHAP"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* synth = app.add_subcommand("synth", "Write a synthetic cohort of sustained vowels");
  std::string spec_path, synth_out;
  std::uint64_t synth_seed = 42;
  std::optional<std::size_t> per_class;
  synth->add_option("--spec", spec_path, "Cohort spec JSON")->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--n", per_class, "Recordings per class")->check(CLI::PositiveNumber);

  auto* extract = app.add_subcommand("extract", "Measure features for every recording in a manifest");
  std::string manifest, audio_dir, meta, extract_out;
  auto* manifest_opt = extract->add_option("--manifest", manifest, "CSV with id, path, label, ...")
                           ->check(CLI::ExistingFile);
  auto* dir_opt = extract->add_option("--audio-dir", audio_dir, "Directory of <id>.wav files")
                      ->check(CLI::ExistingDirectory);
  auto* meta_opt = extract->add_option("--meta", meta, "Metadata CSV for --audio-dir")->check(CLI::ExistingFile);
  manifest_opt->excludes(dir_opt);
  dir_opt->needs(meta_opt);
  extract->add_option("--out", extract_out, "Feature CSV")->required();
  AddCommonFlags(extract, flags);

  std::string features, out, model_path;
  auto* train = app.add_subcommand("train", "Fit one model on every row");
  train->add_option("--features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "Model JSON")->required();
  AddCommonFlags(train, flags);

  auto* eval = app.add_subcommand("eval", "Leave-one-out evaluation");
  eval->add_option("--features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out, "Report JSON");
  eval->add_option("--strata", flags.strata, "Comma list of gender, age50, environment");
  AddCommonFlags(eval, flags);

  auto* explain = app.add_subcommand("explain", "SHAP attributions, global ranking and validation curve");
  std::size_t max_k = 20;
  explain->add_option("--features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
  explain->add_option("--model", model_path, "Model JSON; trained on the features when absent")
      ->check(CLI::ExistingFile);
  explain->add_option("--out", out, "Output directory")->required();
  explain->add_option("--max-k", max_k, "Largest top-k on the validation curve")->check(CLI::PositiveNumber);
  AddCommonFlags(explain, flags);

  auto* ablate = app.add_subcommand("ablate", "Cohort ablations");
  std::string mode;
  double fraction = 0.07;
  std::size_t runs = 100;
  ablate->add_option("mode", mode, "remove-lab or remove-random")
      ->required()
      ->check(CLI::IsMember({"remove-lab", "remove-random"}));
  ablate->add_option("--features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
  ablate->add_option("--out", out, "Report JSON");
  ablate->add_option("--fraction", fraction, "Share of rows removed per run");
  ablate->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);
  AddCommonFlags(ablate, flags);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*synth) return RunSynth(spec_path, synth_out, synth_seed, per_class);
    if (*extract) {
      if (manifest.empty() && audio_dir.empty()) throw CLI::RequiredError("--manifest or --audio-dir");
      return RunExtract(flags, manifest, audio_dir, meta, extract_out);
    }
    if (*train) return RunTrain(flags, features, out);
    if (*eval) return RunEval(flags, features, out);
    if (*explain) return RunExplain(flags, features, model_path, out, max_k);
    if (*ablate) return RunAblate(flags, mode, features, out, fraction, runs);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
