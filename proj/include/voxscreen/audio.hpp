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
#include <span>
#include <string>
#include <vector>

namespace voxscreen {

inline constexpr double kAnalysisSampleRate = 16000.0;

// Mono recording. Samples are finite and nominally within [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  double sample_rate = kAnalysisSampleRate;
  std::string source_id;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Half-open sample range [start_index, end_index) retained by trimming.
struct TrimBounds {
  std::size_t start_index = 0;
  std::size_t end_index = 0;
};

struct VadConfig {
  double frame_seconds = 0.030;
  double hop_seconds = 0.010;
  double relative_threshold = 0.05;  // fraction of the loudest frame's RMS
  double absolute_floor = 1e-4;
};

struct TrimResult {
  AudioBuffer audio;
  TrimBounds bounds;
  // Set when no frame cleared the threshold and the input passed through.
  bool no_activity = false;
};

enum class WavEncoding { kPcm16, kPcm24, kFloat32 };

// Decodes RIFF/WAVE PCM-16, PCM-24 or IEEE float-32 with any channel count.
// Integer PCM is scaled to [-1, 1]; channels are averaged to mono.
AudioBuffer DecodeWav(std::span<const std::uint8_t> bytes, std::string source_id = {});
AudioBuffer ReadWav(const std::filesystem::path& path);

std::vector<std::uint8_t> EncodeWav(const AudioBuffer& audio, WavEncoding encoding);
void WriteWav(const std::filesystem::path& path, const AudioBuffer& audio,
              WavEncoding encoding = WavEncoding::kPcm16);

// Kaiser-windowed sinc interpolation; the passband edge sits at 95% of the
// lower Nyquist frequency. Output length is round(n * target / source).
AudioBuffer Resample(const AudioBuffer& audio, double target_rate);

// Energy-based endpoint removal: keeps the span from the first to the last
// frame whose RMS exceeds max(absolute_floor, relative_threshold * peak RMS).
TrimResult TrimEndpoints(const AudioBuffer& audio, const VadConfig& config = {});

}  // namespace voxscreen
