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

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "voxscreen/audio.hpp"
#include "voxscreen/pitch.hpp"

namespace voxscreen {

inline constexpr std::size_t kNumMfcc = 13;
inline constexpr std::size_t kNumBands = 4;

struct PitchStats {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;  // population
};

struct JitterFeatures {
  double mean = 0.0;    // identical to local
  double median = 0.0;  // median |dT| / median T
  double local = 0.0;
  double local_absolute = 0.0;  // seconds
  double rap = 0.0;
  double ppq5 = 0.0;
  double ddp = 0.0;
};

struct ShimmerFeatures {
  double mean = 0.0;    // identical to local
  double median = 0.0;  // median |dA| / median A
  double local = 0.0;
  double local_db = 0.0;
  double apq3 = 0.0;
  double apq5 = 0.0;
  double apq11 = 0.0;  // kMissing when no region holds 11 cycles
  double dda = 0.0;
};

struct MfccConfig {
  double frame_seconds = 0.025;
  double hop_seconds = 0.010;
  double pre_emphasis = 0.97;
  std::size_t num_filters = 26;
  double low_hz = 0.0;
  double high_hz = 8000.0;
  // Floor applied to filterbank energies before the log.
  double energy_floor = 1e-20;
};

struct MfccFeatures {
  std::array<double, kNumMfcc> mean{};
  // Mean absolute frame-to-frame difference of each coefficient.
  std::array<double, kNumMfcc> variation{};
};

struct ClassicFeatures {
  PitchStats pitch;
  JitterFeatures jitter;
  ShimmerFeatures shimmer;
  MfccFeatures mfcc;
  std::array<double, kNumBands> rel_band_power{};
  double hnr = 0.0;
};

// Statistics over voiced frames only.
PitchStats ComputePitchStats(const F0Track& track);

// Requires at least 5 periods.
JitterFeatures ComputeJitter(const PeriodMarks& marks);
ShimmerFeatures ComputeShimmer(const PeriodMarks& marks);

// HTK mel scale.
double HzToMel(double hz);
double MelToHz(double mel);

// Triangular filters evaluated at the centre frequency of each FFT bin;
// row f holds the weights of filter f over bins 0..fft_size/2.
std::vector<std::vector<double>> MelFilterbank(std::size_t num_filters, std::size_t fft_size,
                                               double sample_rate, double low_hz, double high_hz);

// Orthonormal type-II DCT, keeping the first num_coefficients outputs.
std::vector<double> DctOrthonormal(std::span<const double> input, std::size_t num_coefficients);

// Per-frame cepstra c0..c12. Each frame is pre-emphasized on its own
// (first sample uses itself as predecessor) and Hann windowed.
std::vector<std::array<double, kNumMfcc>> ComputeMfccFrames(const AudioBuffer& audio,
                                                            const MfccConfig& config = {});
MfccFeatures ComputeMfcc(const AudioBuffer& audio, const MfccConfig& config = {});

// Median over 25 ms frames of the power in [0,500), [500,1000), [1000,2000)
// and [2000,4000] Hz, normalized to sum to one.
std::array<double, kNumBands> ComputeRelativeBandPower(const AudioBuffer& audio);

}  // namespace voxscreen
