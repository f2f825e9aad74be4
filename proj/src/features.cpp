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

#include "voxscreen/features.hpp"

#include <algorithm>
#include <cmath>

#include "voxscreen/error.hpp"
#include "voxscreen/numeric.hpp"
#include "voxscreen/spectrum.hpp"

namespace voxscreen {
namespace {

struct Range {
  std::size_t begin;
  std::size_t end;
};

std::vector<Range> Regions(const PeriodMarks& marks) {
  std::vector<Range> out;
  const auto& offsets = marks.region_offsets;
  if (offsets.empty()) {
    out.push_back({0, marks.size()});
    return out;
  }
  for (std::size_t r = 0; r < offsets.size(); ++r) {
    const std::size_t end = r + 1 < offsets.size() ? offsets[r + 1] : marks.size();
    if (end > offsets[r]) out.push_back({offsets[r], end});
  }
  return out;
}

// Absolute differences of consecutive values, never across regions.
std::vector<double> AbsoluteSteps(std::span<const double> values, const std::vector<Range>& regions) {
  std::vector<double> steps;
  for (const auto& r : regions) {
    for (std::size_t i = r.begin + 1; i < r.end; ++i) steps.push_back(std::abs(values[i] - values[i - 1]));
  }
  return steps;
}

// Mean of |v_i - mean(v_{i-half} .. v_{i+half})| over indices whose whole
// neighbourhood lies in one region; nullopt-like NaN when none do.
double CenteredPerturbation(std::span<const double> values, const std::vector<Range>& regions,
                            std::size_t half) {
  double acc = 0.0;
  std::size_t count = 0;
  const double width = static_cast<double>(2 * half + 1);
  for (const auto& r : regions) {
    for (std::size_t i = r.begin + half; i + half < r.end; ++i) {
      double local = 0.0;
      for (std::size_t j = i - half; j <= i + half; ++j) local += values[j];
      acc += std::abs(values[i] - local / width);
      ++count;
    }
  }
  return count == 0 ? kMissing : acc / static_cast<double>(count);
}

// Mean absolute second difference |v_{i+1} - 2 v_i + v_{i-1}|.
double SecondDifference(std::span<const double> values, const std::vector<Range>& regions) {
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& r : regions) {
    for (std::size_t i = r.begin + 1; i + 1 < r.end; ++i) {
      acc += std::abs((values[i + 1] - values[i]) - (values[i] - values[i - 1]));
      ++count;
    }
  }
  return count == 0 ? kMissing : acc / static_cast<double>(count);
}

void RequirePeriods(const PeriodMarks& marks) {
  if (marks.periods.size() != marks.amplitudes.size()) {
    throw Error(ErrorKind::kInvalidArgument, "period and amplitude counts differ");
  }
  if (marks.size() < 5) {
    throw Error(ErrorKind::kInsufficientPeriods,
                "need at least 5 periods, have " + std::to_string(marks.size()));
  }
}

}  // namespace

PitchStats ComputePitchStats(const F0Track& track) {
  const auto f0 = track.VoicedF0();
  if (f0.empty()) throw Error(ErrorKind::kNoVoicedSpeech, "no voiced frames");
  return {Mean(f0), Median(f0), PopulationStdDev(f0)};
}

JitterFeatures ComputeJitter(const PeriodMarks& marks) {
  RequirePeriods(marks);
  const auto regions = Regions(marks);
  const std::span<const double> periods = marks.periods;
  const auto steps = AbsoluteSteps(periods, regions);
  const double rap_raw = CenteredPerturbation(periods, regions, 1);
  const double ddp_raw = SecondDifference(periods, regions);
  if (steps.empty() || IsMissing(rap_raw)) {
    throw Error(ErrorKind::kInsufficientPeriods, "voiced regions too short for perturbation");
  }
  const double mean_period = Mean(periods);
  const double median_period = Median(marks.periods);

  JitterFeatures j;
  j.local_absolute = Mean(steps);
  j.local = j.local_absolute / mean_period;
  j.mean = j.local;
  j.median = Median(steps) / median_period;
  j.rap = rap_raw / mean_period;
  j.ppq5 = CenteredPerturbation(periods, regions, 2) / mean_period;
  j.ddp = ddp_raw / mean_period;
  return j;
}

ShimmerFeatures ComputeShimmer(const PeriodMarks& marks) {
  RequirePeriods(marks);
  const auto regions = Regions(marks);
  const std::span<const double> amps = marks.amplitudes;
  const auto steps = AbsoluteSteps(amps, regions);
  const double apq3_raw = CenteredPerturbation(amps, regions, 1);
  if (steps.empty() || IsMissing(apq3_raw)) {
    throw Error(ErrorKind::kInsufficientPeriods, "voiced regions too short for perturbation");
  }
  const double mean_amp = Mean(amps);
  const double median_amp = Median(marks.amplitudes);

  ShimmerFeatures s;
  s.local = Mean(steps) / mean_amp;
  s.mean = s.local;
  s.median = Median(steps) / median_amp;

  // Zero-amplitude cycles have no defined log ratio and are skipped.
  double db_acc = 0.0;
  std::size_t db_count = 0;
  for (const auto& r : regions) {
    for (std::size_t i = r.begin + 1; i < r.end; ++i) {
      if (amps[i] <= 0.0 || amps[i - 1] <= 0.0) continue;
      db_acc += std::abs(20.0 * std::log10(amps[i] / amps[i - 1]));
      ++db_count;
    }
  }
  s.local_db = db_count == 0 ? kMissing : db_acc / static_cast<double>(db_count);
  s.apq3 = apq3_raw / mean_amp;
  s.apq5 = CenteredPerturbation(amps, regions, 2) / mean_amp;
  s.apq11 = CenteredPerturbation(amps, regions, 5) / mean_amp;
  s.dda = SecondDifference(amps, regions) / mean_amp;
  return s;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<std::vector<double>> MelFilterbank(std::size_t num_filters, std::size_t fft_size,
                                               double sample_rate, double low_hz, double high_hz) {
  high_hz = std::min(high_hz, 0.5 * sample_rate);
  const double mel_lo = HzToMel(low_hz);
  const double mel_hi = HzToMel(high_hz);
  std::vector<double> edges(num_filters + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                    static_cast<double>(num_filters + 1));
  }
  const std::size_t bins = fft_size / 2 + 1;
  std::vector<std::vector<double>> bank(num_filters, std::vector<double>(bins, 0.0));
  for (std::size_t f = 0; f < num_filters; ++f) {
    const double left = edges[f];
    const double centre = edges[f + 1];
    const double right = edges[f + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double hz = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      if (hz > left && hz <= centre) {
        bank[f][k] = (hz - left) / (centre - left);
      } else if (hz > centre && hz < right) {
        bank[f][k] = (right - hz) / (right - centre);
      }
    }
  }
  return bank;
}

std::vector<double> DctOrthonormal(std::span<const double> input, std::size_t num_coefficients) {
  const std::size_t n = input.size();
  std::vector<double> out(std::min(num_coefficients, n));
  for (std::size_t k = 0; k < out.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += input[i] * std::cos(M_PI * static_cast<double>(k) * (static_cast<double>(i) + 0.5) /
                                 static_cast<double>(n));
    }
    const double scale = k == 0 ? std::sqrt(1.0 / static_cast<double>(n))
                                : std::sqrt(2.0 / static_cast<double>(n));
    out[k] = scale * acc;
  }
  return out;
}

std::vector<std::array<double, kNumMfcc>> ComputeMfccFrames(const AudioBuffer& audio,
                                                            const MfccConfig& config) {
  const double rate = audio.sample_rate;
  const auto frame_len = static_cast<std::size_t>(std::lround(config.frame_seconds * rate));
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(config.hop_seconds * rate)));
  if (frame_len < 2 || audio.size() < frame_len ||
      (audio.size() - frame_len) / hop + 1 < 3) {
    throw Error(ErrorKind::kInsufficientSignal, "MFCC needs at least 3 frames");
  }
  const std::size_t fft_size = NextPowerOfTwo(frame_len);
  const auto bank = MelFilterbank(config.num_filters, fft_size, rate, config.low_hz, config.high_hz);
  const auto window = HannWindow(frame_len);
  PowerSpectrum spectrum(fft_size);

  std::vector<std::array<double, kNumMfcc>> cepstra;
  std::vector<double> frame(frame_len);
  std::vector<double> power;
  std::vector<double> log_energy(config.num_filters);
  for (std::size_t start = 0; start + frame_len <= audio.size(); start += hop) {
    const double* x = audio.samples.data() + start;
    for (std::size_t i = 0; i < frame_len; ++i) {
      const double previous = i == 0 ? x[0] : x[i - 1];
      frame[i] = (x[i] - config.pre_emphasis * previous) * window[i];
    }
    spectrum.Compute(frame, power);
    for (std::size_t f = 0; f < config.num_filters; ++f) {
      double energy = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) energy += bank[f][k] * power[k];
      log_energy[f] = std::log(std::max(energy, config.energy_floor));
    }
    const auto c = DctOrthonormal(log_energy, kNumMfcc);
    std::array<double, kNumMfcc> row{};
    std::copy(c.begin(), c.end(), row.begin());
    cepstra.push_back(row);
  }
  return cepstra;
}

MfccFeatures ComputeMfcc(const AudioBuffer& audio, const MfccConfig& config) {
  const auto frames = ComputeMfccFrames(audio, config);
  MfccFeatures out;
  for (const auto& row : frames) {
    for (std::size_t k = 0; k < kNumMfcc; ++k) out.mean[k] += row[k];
  }
  for (std::size_t t = 1; t < frames.size(); ++t) {
    for (std::size_t k = 0; k < kNumMfcc; ++k) out.variation[k] += std::abs(frames[t][k] - frames[t - 1][k]);
  }
  for (std::size_t k = 0; k < kNumMfcc; ++k) {
    out.mean[k] /= static_cast<double>(frames.size());
    out.variation[k] /= static_cast<double>(frames.size() - 1);
  }
  return out;
}

std::array<double, kNumBands> ComputeRelativeBandPower(const AudioBuffer& audio) {
  constexpr std::array<double, kNumBands + 1> kEdges{0.0, 500.0, 1000.0, 2000.0, 4000.0};
  const double rate = audio.sample_rate;
  const auto frame_len = static_cast<std::size_t>(std::lround(0.025 * rate));
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.010 * rate)));
  if (frame_len < 2 || audio.size() < frame_len) {
    throw Error(ErrorKind::kInsufficientSignal, "band power needs one 25 ms frame");
  }
  const std::size_t fft_size = NextPowerOfTwo(frame_len);
  const auto window = HannWindow(frame_len);
  PowerSpectrum spectrum(fft_size);

  std::array<std::vector<double>, kNumBands> per_band;
  std::vector<double> frame(frame_len);
  std::vector<double> power;
  for (std::size_t start = 0; start + frame_len <= audio.size(); start += hop) {
    for (std::size_t i = 0; i < frame_len; ++i) frame[i] = audio.samples[start + i] * window[i];
    spectrum.Compute(frame, power);
    std::array<double, kNumBands> sums{};
    for (std::size_t k = 0; k < power.size(); ++k) {
      const double hz = static_cast<double>(k) * rate / static_cast<double>(fft_size);
      for (std::size_t b = 0; b < kNumBands; ++b) {
        const bool last = b + 1 == kNumBands;
        if (hz >= kEdges[b] && (hz < kEdges[b + 1] || (last && hz <= kEdges[b + 1]))) {
          sums[b] += power[k];
          break;
        }
      }
    }
    for (std::size_t b = 0; b < kNumBands; ++b) per_band[b].push_back(sums[b]);
  }

  std::array<double, kNumBands> medians{};
  double total = 0.0;
  for (std::size_t b = 0; b < kNumBands; ++b) {
    medians[b] = Median(per_band[b]);
    total += medians[b];
  }
  if (!(total > 0.0)) {
    // Silent input carries no spectral shape; report the flat split.
    medians.fill(1.0 / kNumBands);
    return medians;
  }
  for (auto& m : medians) m /= total;
  return medians;
}

}  // namespace voxscreen
