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

#include "voxscreen/pitch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "voxscreen/error.hpp"

namespace voxscreen {
namespace {

constexpr double kMinCycleCorrelation = 0.5;

struct Peak {
  double position;
  double value;
};

struct WaveformMark {
  double position;  // sub-sample location of the peak
  double sample;    // largest raw sample at the peak
};

// Vertex of the parabola through (i-1, i, i+1).
Peak ParabolicPeak(double left, double centre, double right, double index) {
  const double denom = left - 2.0 * centre + right;
  if (denom >= 0.0) return {index, centre};
  const double delta = std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
  return {index + delta, centre - 0.25 * (left - right) * delta};
}

// Normalized autocorrelation of one analysis frame for lags [0, max_lag].
std::vector<double> NormalizedAutocorrelation(const std::vector<double>& x, std::size_t max_lag) {
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];
  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t lag = 0; lag <= max_lag && lag < n; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += x[i] * x[i + lag];
    const double head = prefix[n - lag];
    const double tail = prefix[n] - prefix[lag];
    const double norm = std::sqrt(head * tail);
    r[lag] = norm > 0.0 ? acc / norm : 0.0;
  }
  return r;
}

F0Frame AnalyzeFrame(std::vector<double> frame, double time, double rate,
                     const PitchConfig& config) {
  F0Frame result{time, 0.0, 0.0};
  const double mean = std::accumulate(frame.begin(), frame.end(), 0.0) / frame.size();
  double energy = 0.0;
  for (double& v : frame) {
    v -= mean;
    energy += v * v;
  }
  if (energy <= 0.0) return result;

  const auto min_lag = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(rate / config.f0_ceil)));
  const auto max_lag = std::min<std::size_t>(
      frame.size() - 2, static_cast<std::size_t>(std::ceil(rate / config.f0_floor)));
  if (min_lag >= max_lag) return result;
  const auto r = NormalizedAutocorrelation(frame, max_lag + 1);

  std::optional<Peak> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    if (!(r[lag] >= r[lag - 1] && r[lag] > r[lag + 1])) continue;
    Peak peak = ParabolicPeak(r[lag - 1], r[lag], r[lag + 1], static_cast<double>(lag));
    peak.value = std::min(peak.value, 1.0);
    const double score = peak.value - config.octave_cost * std::log2(config.f0_floor * peak.position / rate);
    if (score > best_score) {
      best_score = score;
      best = peak;
    }
  }
  if (!best) return result;
  result.strength = std::max(0.0, best->value);
  if (result.strength >= config.voicing_threshold) {
    result.f0 = std::clamp(rate / best->position, config.f0_floor, config.f0_ceil);
  }
  return result;
}

double NormalizedCrossCorrelation(const std::vector<double>& x, std::ptrdiff_t a,
                                  std::ptrdiff_t b, std::ptrdiff_t length) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::ptrdiff_t i = 0; i < length; ++i) {
    const double u = x[static_cast<std::size_t>(a + i)];
    const double v = x[static_cast<std::size_t>(b + i)];
    ab += u * v;
    aa += u * u;
    bb += v * v;
  }
  const double norm = std::sqrt(aa * bb);
  return norm > 0.0 ? ab / norm : 0.0;
}

// Largest sample in [lo, hi] and its sub-sample position.
WaveformMark WaveformPeak(const std::vector<double>& x, std::ptrdiff_t lo, std::ptrdiff_t hi) {
  std::ptrdiff_t arg = lo;
  for (std::ptrdiff_t i = lo; i <= hi; ++i) {
    if (x[static_cast<std::size_t>(i)] > x[static_cast<std::size_t>(arg)]) arg = i;
  }
  const double sample = x[static_cast<std::size_t>(arg)];
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  if (arg <= 0 || arg >= n - 1) return {static_cast<double>(arg), sample};
  const Peak peak = ParabolicPeak(x[static_cast<std::size_t>(arg - 1)], sample,
                                  x[static_cast<std::size_t>(arg + 1)], static_cast<double>(arg));
  return {peak.position, sample};
}

struct VoicedRegion {
  std::size_t first_frame;
  std::size_t last_frame;
};

std::vector<VoicedRegion> FindVoicedRegions(const F0Track& track, std::size_t min_frames) {
  std::vector<VoicedRegion> regions;
  std::size_t k = 0;
  while (k < track.frames.size()) {
    if (!track.frames[k].voiced()) {
      ++k;
      continue;
    }
    std::size_t end = k;
    while (end + 1 < track.frames.size() && track.frames[end + 1].voiced()) ++end;
    if (end - k + 1 >= min_frames) regions.push_back({k, end});
    k = end + 1;
  }
  return regions;
}

}  // namespace

std::vector<double> F0Track::VoicedF0() const {
  std::vector<double> f0;
  for (const auto& frame : frames) {
    if (frame.voiced()) f0.push_back(frame.f0);
  }
  return f0;
}

std::size_t F0Track::VoicedCount() const {
  return static_cast<std::size_t>(
      std::count_if(frames.begin(), frames.end(), [](const F0Frame& f) { return f.voiced(); }));
}

PeriodMarks PeriodMarks::FromSequences(std::vector<double> periods, std::vector<double> amplitudes) {
  if (periods.size() != amplitudes.size()) {
    throw Error(ErrorKind::kInvalidArgument, "periods and amplitudes differ in length");
  }
  PeriodMarks marks;
  marks.periods = std::move(periods);
  marks.amplitudes = std::move(amplitudes);
  marks.region_offsets = {0};
  return marks;
}

F0Track EstimateF0(const AudioBuffer& audio, const PitchConfig& config) {
  if (!(config.f0_floor > 0.0) || !(config.f0_ceil > config.f0_floor)) {
    throw Error(ErrorKind::kInvalidArgument, "pitch range must satisfy 0 < floor < ceil");
  }
  const double rate = audio.sample_rate;
  const std::size_t n = audio.samples.size();
  if (static_cast<double>(n) < 2.0 * rate / config.f0_floor) {
    throw Error(ErrorKind::kInsufficientSignal, "buffer shorter than two periods of the pitch floor");
  }
  // A buffer shorter than one window is analyzed as a single frame.
  const auto window = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::lround(config.window_seconds * rate)));
  const auto hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(config.hop_seconds * rate)));

  F0Track track;
  track.hop = static_cast<double>(hop) / rate;
  track.window = static_cast<double>(window) / rate;
  for (std::size_t start = 0; start + window <= n; start += hop) {
    std::vector<double> frame(audio.samples.begin() + static_cast<std::ptrdiff_t>(start),
                              audio.samples.begin() + static_cast<std::ptrdiff_t>(start + window));
    const double time = (static_cast<double>(start) + 0.5 * static_cast<double>(window)) / rate;
    track.frames.push_back(AnalyzeFrame(std::move(frame), time, rate, config));
  }
  return track;
}

PeriodMarks ExtractPeriodMarks(const AudioBuffer& audio, const F0Track& track) {
  const auto regions = FindVoicedRegions(track, 3);
  if (regions.empty()) throw Error(ErrorKind::kNoVoicedSpeech, "no voiced region of 3 or more frames");

  const double rate = audio.sample_rate;
  const auto& x = audio.samples;
  const auto n = static_cast<std::ptrdiff_t>(x.size());

  PeriodMarks marks;
  for (const auto& region : regions) {
    const double t0 = track.frames[region.first_frame].time - 0.5 * track.hop;
    const double t1 = track.frames[region.last_frame].time + 0.5 * track.hop;
    const auto span_start = std::max<std::ptrdiff_t>(0, std::lround(t0 * rate));
    const auto span_end = std::min<std::ptrdiff_t>(n, std::lround(t1 * rate));

    // Nominal period in samples at a sample position, from the nearest
    // voiced frame of this region.
    auto nominal_period = [&](double position) {
      const double t = position / rate;
      std::size_t best = region.first_frame;
      for (std::size_t k = region.first_frame; k <= region.last_frame; ++k) {
        if (std::abs(track.frames[k].time - t) < std::abs(track.frames[best].time - t)) best = k;
      }
      return rate / track.frames[best].f0;
    };

    double cursor = static_cast<double>(span_start);
    while (true) {
      double period = nominal_period(cursor);
      const auto first_lo = static_cast<std::ptrdiff_t>(std::ceil(cursor));
      const auto first_hi = static_cast<std::ptrdiff_t>(std::floor(cursor + period));
      if (first_hi + static_cast<std::ptrdiff_t>(2.25 * period) >= span_end) break;

      std::vector<WaveformMark> boundaries{WaveformPeak(x, first_lo, first_hi)};
      while (true) {
        const double b = boundaries.back().position;
        period = nominal_period(b);
        const auto seg = static_cast<std::ptrdiff_t>(std::lround(period));
        const auto origin = static_cast<std::ptrdiff_t>(std::lround(b));
        // Comparison window centred on the current cycle's peak.
        const auto start = origin - seg / 2;
        const auto lag_lo = static_cast<std::ptrdiff_t>(std::ceil(0.75 * period));
        const auto lag_hi = static_cast<std::ptrdiff_t>(std::floor(1.25 * period));
        if (start < span_start || start + lag_hi + 1 + seg >= span_end) break;

        std::vector<double> cc(static_cast<std::size_t>(lag_hi - lag_lo + 3));
        for (std::ptrdiff_t lag = lag_lo - 1; lag <= lag_hi + 1; ++lag) {
          cc[static_cast<std::size_t>(lag - lag_lo + 1)] = NormalizedCrossCorrelation(x, start, start + lag, seg);
        }
        std::ptrdiff_t best_lag = lag_lo;
        for (std::ptrdiff_t lag = lag_lo; lag <= lag_hi; ++lag) {
          if (cc[static_cast<std::size_t>(lag - lag_lo + 1)] > cc[static_cast<std::size_t>(best_lag - lag_lo + 1)]) {
            best_lag = lag;
          }
        }
        const auto at = static_cast<std::size_t>(best_lag - lag_lo + 1);
        if (cc[at] < kMinCycleCorrelation) break;
        // Waveform matching gives the sub-sample shift; the peak anchors it.
        const double shift = ParabolicPeak(cc[at - 1], cc[at], cc[at + 1], static_cast<double>(best_lag)).position;
        const auto snap = std::max<std::ptrdiff_t>(1, seg / 8);
        const auto lo = std::max(origin + lag_lo, origin + best_lag - snap);
        const auto hi = std::min(origin + lag_hi, origin + best_lag + snap);
        WaveformMark next = WaveformPeak(x, lo, hi);
        const double matched = b + shift;
        if (std::abs(matched - next.position) <= 1.0) next.position = matched;
        boundaries.push_back(next);
      }

      if (boundaries.size() >= 2) {
        marks.region_offsets.push_back(marks.periods.size());
        for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
          marks.periods.push_back((boundaries[i + 1].position - boundaries[i].position) / rate);
          marks.amplitudes.push_back(std::abs(boundaries[i].sample));
        }
      }
      cursor = boundaries.back().position + 0.5 * period;
    }
  }
  if (marks.periods.empty()) throw Error(ErrorKind::kNoVoicedSpeech, "no periodic cycles found");
  return marks;
}

double HarmonicsToNoise(const F0Track& track) {
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& frame : track.frames) {
    if (!frame.voiced()) continue;
    const double r = std::clamp(frame.strength, 1e-6, 1.0 - 1e-6);
    acc += 10.0 * std::log10(r / (1.0 - r));
    ++count;
  }
  if (count == 0) throw Error(ErrorKind::kNoVoicedSpeech, "no voiced frames");
  return acc / static_cast<double>(count);
}

double HarmonicsToNoise(const AudioBuffer& audio, const PitchConfig& config) {
  return HarmonicsToNoise(EstimateF0(audio, config));
}

}  // namespace voxscreen
