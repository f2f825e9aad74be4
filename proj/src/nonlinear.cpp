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

#include "voxscreen/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "voxscreen/error.hpp"
#include "voxscreen/numeric.hpp"

namespace voxscreen {
namespace {

// Semitone residuals below this are treated as a perfectly steady pitch.
constexpr double kSteadyPitchTolerance = 1e-9;

// Least-squares slope of y on x.
double Slope(std::span<const double> x, std::span<const double> y) {
  const double mx = Mean(x);
  const double my = Mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// Solves the normal equations of an order-p linear predictor from
// autocorrelation lags r[0..p] (Levinson-Durbin). Returns a[1..p] such that
// s_t is predicted by sum_k a[k] s_{t-k}.
std::vector<double> LevinsonDurbin(const std::vector<double>& r, std::size_t order) {
  std::vector<double> a(order + 1, 0.0);
  double error = r[0];
  for (std::size_t i = 1; i <= order; ++i) {
    if (error <= 0.0) break;
    double acc = r[i];
    for (std::size_t j = 1; j < i; ++j) acc -= a[j] * r[i - j];
    const double k = acc / error;
    std::vector<double> next = a;
    next[i] = k;
    for (std::size_t j = 1; j < i; ++j) next[j] = a[j] - k * a[i - j];
    a = std::move(next);
    error *= (1.0 - k * k);
  }
  return a;
}

}  // namespace

AudioBuffer CenteredExcerpt(const AudioBuffer& audio, double max_seconds) {
  const auto max_len = static_cast<std::size_t>(std::llround(max_seconds * audio.sample_rate));
  if (audio.size() <= max_len) return audio;
  AudioBuffer out;
  out.sample_rate = audio.sample_rate;
  out.source_id = audio.source_id;
  const std::size_t start = (audio.size() - max_len) / 2;
  out.samples.assign(audio.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     audio.samples.begin() + static_cast<std::ptrdiff_t>(start + max_len));
  return out;
}

std::size_t FirstAutocorrelationZero(std::span<const double> signal, std::size_t cap) {
  const double mean = Mean(signal);
  for (std::size_t lag = 1; lag < cap && lag < signal.size(); ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < signal.size(); ++i) {
      acc += (signal[i] - mean) * (signal[i + lag] - mean);
    }
    if (acc <= 0.0) return lag;
  }
  return cap;
}

std::vector<double> RecurrencePeriodHistogram(std::span<const double> signal, const EmbedConfig& config) {
  if (config.dimension == 0 || config.max_period == 0) {
    throw Error(ErrorKind::kInvalidArgument, "embedding dimension and max period must be positive");
  }
  const std::size_t delay =
      config.delay > 0 ? config.delay : FirstAutocorrelationZero(signal, config.max_delay);
  const std::size_t span = (config.dimension - 1) * delay;
  if (signal.size() < config.max_period + span + 1) {
    throw Error(ErrorKind::kInsufficientSignal, "signal shorter than max period plus embedding span");
  }
  const std::size_t points = signal.size() - span;
  const double radius = config.radius_factor * PopulationStdDev(signal);
  const double radius_sq = radius * radius;

  auto distance_sq = [&](std::size_t a, std::size_t b) {
    double acc = 0.0;
    for (std::size_t d = 0; d < config.dimension; ++d) {
      const double diff = signal[a + d * delay] - signal[b + d * delay];
      acc += diff * diff;
    }
    return acc;
  };

  std::vector<double> counts(config.max_period, 0.0);
  for (std::size_t i = 0; i < points; ++i) {
    const std::size_t horizon = std::min(points, i + config.max_period + 1);
    std::size_t j = i + 1;
    // Leave the ball first, then wait for the first re-entry.
    while (j < horizon && distance_sq(i, j) < radius_sq) ++j;
    while (j < horizon && distance_sq(i, j) >= radius_sq) ++j;
    if (j < horizon) counts[j - i - 1] += 1.0;
  }
  return counts;
}

double NormalizedEntropy(std::span<const double> counts, std::size_t num_bins) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(total > 0.0) || num_bins < 2) return 0.0;
  double entropy = 0.0;
  for (const double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / total;
    entropy -= p * std::log(p);
  }
  return std::clamp(entropy / std::log(static_cast<double>(num_bins)), 0.0, 1.0);
}

double Rpde(const AudioBuffer& audio, const EmbedConfig& config) {
  const auto excerpt = CenteredExcerpt(audio, config.max_excerpt_seconds);
  const auto counts = RecurrencePeriodHistogram(excerpt.samples, config);
  if (std::all_of(counts.begin(), counts.end(), [](double c) { return c == 0.0; })) {
    throw Error(ErrorKind::kNoRecurrence, "no trajectory returned within the max period");
  }
  return NormalizedEntropy(counts, config.max_period);
}

double DfaExponent(std::span<const double> signal, const DfaConfig& config) {
  const std::size_t n = signal.size();
  const std::size_t max_window = n / 4;
  if (config.num_windows < 2 || max_window <= config.min_window) {
    throw Error(ErrorKind::kInsufficientSignal, "signal too short for the DFA window range");
  }

  std::vector<double> profile(n);
  const double mean = Mean(signal);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += signal[i] - mean;
    profile[i] = acc;
  }

  std::vector<std::size_t> sizes;
  const double log_lo = std::log(static_cast<double>(config.min_window));
  const double log_hi = std::log(static_cast<double>(max_window));
  for (std::size_t k = 0; k < config.num_windows; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(config.num_windows - 1);
    const auto size = static_cast<std::size_t>(std::lround(std::exp(log_lo + t * (log_hi - log_lo))));
    if (sizes.empty() || size != sizes.back()) sizes.push_back(size);
  }
  if (sizes.size() < 2) throw Error(ErrorKind::kInsufficientSignal, "DFA window range collapsed");

  std::vector<double> log_sizes, log_fluct;
  for (const std::size_t size : sizes) {
    const std::size_t windows = n / size;
    // Centred abscissa makes the per-window fit closed form.
    const double centre = 0.5 * static_cast<double>(size - 1);
    double sxx = 0.0;
    for (std::size_t i = 0; i < size; ++i) sxx += (i - centre) * (i - centre);
    double residual = 0.0;
    for (std::size_t w = 0; w < windows; ++w) {
      const double* y = profile.data() + w * size;
      double sy = 0.0, sxy = 0.0;
      for (std::size_t i = 0; i < size; ++i) {
        sy += y[i];
        sxy += (i - centre) * y[i];
      }
      const double intercept = sy / static_cast<double>(size);
      const double slope = sxy / sxx;
      for (std::size_t i = 0; i < size; ++i) {
        const double e = y[i] - intercept - slope * (i - centre);
        residual += e * e;
      }
    }
    const double fluctuation = std::sqrt(residual / static_cast<double>(windows * size));
    if (!(fluctuation > 0.0)) continue;
    log_sizes.push_back(std::log(static_cast<double>(size)));
    log_fluct.push_back(std::log(fluctuation));
  }
  if (log_sizes.size() < 2) {
    throw Error(ErrorKind::kInsufficientSignal, "signal has no fluctuation to scale");
  }
  return Slope(log_sizes, log_fluct);
}

double NormalizeDfa(double exponent) { return 1.0 / (1.0 + std::exp(-exponent)); }

double Dfa(const AudioBuffer& audio, const DfaConfig& config) {
  const auto excerpt = CenteredExcerpt(audio, config.max_excerpt_seconds);
  return NormalizeDfa(DfaExponent(excerpt.samples, config));
}

double Ppe(const F0Track& track, const PpeConfig& config) {
  const auto f0 = track.VoicedF0();
  if (f0.size() < config.min_voiced_frames) {
    throw Error(ErrorKind::kInsufficientSignal,
                "PPE needs " + std::to_string(config.min_voiced_frames) + " voiced frames");
  }
  std::vector<double> semitones(f0.size());
  for (std::size_t t = 0; t < f0.size(); ++t) {
    semitones[t] = 12.0 * std::log2(f0[t] / config.reference_hz);
  }
  const double mean = Mean(semitones);
  for (double& s : semitones) s -= mean;

  const std::size_t order = config.predictor_order;
  std::vector<double> r(order + 1, 0.0);
  for (std::size_t k = 0; k <= order; ++k) {
    for (std::size_t t = k; t < semitones.size(); ++t) r[k] += semitones[t] * semitones[t - k];
  }
  const auto a = LevinsonDurbin(r, order);

  std::vector<double> residual(semitones.size());
  for (std::size_t t = 0; t < semitones.size(); ++t) {
    double predicted = 0.0;
    for (std::size_t k = 1; k <= order && k <= t; ++k) predicted += a[k] * semitones[t - k];
    residual[t] = semitones[t] - predicted;
  }
  double power = 0.0;
  for (const double e : residual) power += e * e;
  const double sigma = std::sqrt(power / static_cast<double>(residual.size()));
  if (sigma <= kSteadyPitchTolerance) return 0.0;

  const double lo = -config.range_sigmas * sigma;
  const double width = 2.0 * config.range_sigmas * sigma / static_cast<double>(config.num_bins);
  std::vector<double> counts(config.num_bins, 0.0);
  for (const double e : residual) {
    const auto bin = static_cast<std::ptrdiff_t>(std::floor((e - lo) / width));
    counts[static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(config.num_bins) - 1))] += 1.0;
  }
  return NormalizedEntropy(counts, config.num_bins);
}

}  // namespace voxscreen
