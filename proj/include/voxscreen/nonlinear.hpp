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
#include <span>
#include <vector>

#include "voxscreen/audio.hpp"
#include "voxscreen/pitch.hpp"

namespace voxscreen {

// Recurrence period density entropy parameters. These are defaults chosen to
// behave like the original toolbox in spirit; they are not bit-compatible.
struct EmbedConfig {
  std::size_t dimension = 4;
  // Embedding delay in samples; 0 selects the first zero of the
  // autocorrelation, capped at max_delay.
  std::size_t delay = 0;
  std::size_t max_delay = 50;
  // Recurrence radius as a multiple of the signal standard deviation.
  double radius_factor = 0.12;
  std::size_t max_period = 1000;
  double max_excerpt_seconds = 5.0;
};

struct DfaConfig {
  std::size_t min_window = 50;
  std::size_t num_windows = 10;
  double max_excerpt_seconds = 5.0;
};

struct PpeConfig {
  std::size_t predictor_order = 2;
  std::size_t num_bins = 30;
  double range_sigmas = 5.0;
  double reference_hz = 120.0;
  std::size_t min_voiced_frames = 32;
};

struct NonlinearFeatures {
  double rpde = 0.0;
  double dfa = 0.0;
  double ppe = 0.0;
};

// The central max_seconds of the buffer (the whole buffer when shorter).
AudioBuffer CenteredExcerpt(const AudioBuffer& audio, double max_seconds);

// Smallest lag >= 1 at which the autocorrelation of the mean-removed signal
// is <= 0, or cap when none is found up to cap.
std::size_t FirstAutocorrelationZero(std::span<const double> signal, std::size_t cap);

// Histogram of first-return periods: counts[p - 1] is the number of points
// whose trajectory left the radius ball and re-entered after p samples.
std::vector<double> RecurrencePeriodHistogram(std::span<const double> signal, const EmbedConfig& config);

// Shannon entropy of a count histogram divided by ln(num_bins).
double NormalizedEntropy(std::span<const double> counts, std::size_t num_bins);

double Rpde(const AudioBuffer& audio, const EmbedConfig& config = {});

// Raw scaling exponent of detrended fluctuation analysis.
double DfaExponent(std::span<const double> signal, const DfaConfig& config = {});
// Logistic map of the exponent into (0, 1).
double NormalizeDfa(double exponent);
double Dfa(const AudioBuffer& audio, const DfaConfig& config = {});

// Entropy of the whitened semitone pitch residual.
double Ppe(const F0Track& track, const PpeConfig& config = {});

}  // namespace voxscreen
