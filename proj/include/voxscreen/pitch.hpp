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
#include <vector>

#include "voxscreen/audio.hpp"

namespace voxscreen {

// Defaults span adult male and female speaking pitch.
struct PitchConfig {
  double f0_floor = 60.0;
  double f0_ceil = 400.0;
  double voicing_threshold = 0.45;
  double window_seconds = 0.040;
  double hop_seconds = 0.010;
  // Penalty per octave of lag; resolves period-doubling ties toward the
  // shorter period.
  double octave_cost = 0.05;
};

struct F0Frame {
  double time = 0.0;      // window centre, seconds
  double f0 = 0.0;        // Hz; 0 marks an unvoiced frame
  double strength = 0.0;  // normalized autocorrelation at the chosen lag

  bool voiced() const { return f0 > 0.0; }
};

struct F0Track {
  std::vector<F0Frame> frames;
  double hop = 0.0;
  double window = 0.0;

  std::vector<double> VoicedF0() const;
  std::size_t VoicedCount() const;
};

// Per-cycle periods T_i (seconds) and peak amplitudes A_i. Cycles are grouped
// into regions of contiguous voicing; region_offsets[r] is the index of the
// first cycle of region r. Perturbation measures never pair cycles across
// regions.
struct PeriodMarks {
  std::vector<double> periods;
  std::vector<double> amplitudes;
  std::vector<std::size_t> region_offsets;

  std::size_t size() const { return periods.size(); }

  // Single-region marks, as measured from one sustained segment.
  static PeriodMarks FromSequences(std::vector<double> periods, std::vector<double> amplitudes);
};

// Framewise normalized autocorrelation pitch estimate with parabolic peak
// interpolation.
F0Track EstimateF0(const AudioBuffer& audio, const PitchConfig& config = {});

// Places cycle boundaries on waveform peaks within each voiced region. Each
// step cross-correlates the previous cycle against candidates within +/-25%
// of the nominal period, then snaps to the nearby peak. A_i is the magnitude
// of the peak sample that opens cycle i; a peak-to-peak window would mix in
// the rising edge of the next cycle.
PeriodMarks ExtractPeriodMarks(const AudioBuffer& audio, const F0Track& track);

// Mean over voiced frames of 10 log10(r / (1 - r)), r clamped to
// [1e-6, 1 - 1e-6].
double HarmonicsToNoise(const F0Track& track);
double HarmonicsToNoise(const AudioBuffer& audio, const PitchConfig& config = {});

}  // namespace voxscreen
