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

#include "voxscreen/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "voxscreen/error.hpp"

namespace voxscreen {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t ReadU16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t ReadU32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void PutU16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xFF));
  }
}

void PutTag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

bool TagIs(const std::uint8_t* p, const char* tag) { return std::memcmp(p, tag, 4) == 0; }

struct WavFormat {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

double DecodeSample(const std::uint8_t* p, const WavFormat& fmt) {
  if (fmt.tag == kFormatFloat) {
    float v;
    std::uint32_t raw = ReadU32(p);
    std::memcpy(&v, &raw, sizeof(v));
    return static_cast<double>(v);
  }
  if (fmt.bits == 16) {
    return static_cast<std::int16_t>(ReadU16(p)) / 32768.0;
  }
  // 24-bit little endian, sign-extended.
  std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
  if (v & 0x800000) v |= ~0xFFFFFF;
  return v / 8388608.0;
}

double Sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

}  // namespace

AudioBuffer DecodeWav(std::span<const std::uint8_t> bytes, std::string source_id) {
  if (bytes.size() < 12 || !TagIs(bytes.data(), "RIFF") || !TagIs(bytes.data() + 8, "WAVE")) {
    throw Error(ErrorKind::kParseError, "not a RIFF/WAVE file");
  }
  WavFormat fmt;
  bool have_format = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::size_t declared = ReadU32(chunk + 4);
    const std::size_t available = bytes.size() - pos - 8;
    if (TagIs(chunk, "fmt ")) {
      if (declared < 16 || declared > available) {
        throw Error(ErrorKind::kParseError, "truncated fmt chunk");
      }
      fmt.tag = ReadU16(chunk + 8);
      fmt.channels = ReadU16(chunk + 10);
      fmt.sample_rate = ReadU32(chunk + 12);
      fmt.block_align = ReadU16(chunk + 20);
      fmt.bits = ReadU16(chunk + 22);
      if (fmt.tag == kFormatExtensible) {
        if (declared < 40) throw Error(ErrorKind::kParseError, "truncated extensible fmt chunk");
        // Sub-format GUID starts with the plain format tag.
        fmt.tag = ReadU16(chunk + 8 + 24);
      }
      have_format = true;
    } else if (TagIs(chunk, "data")) {
      data = chunk + 8;
      // Streaming writers leave the size unset; take what the file holds.
      data_size = std::min(declared, available);
      have_data = true;
      break;
    }
    pos += 8 + declared + (declared & 1);
  }
  if (!have_format) throw Error(ErrorKind::kParseError, "missing fmt chunk");
  if (!have_data) throw Error(ErrorKind::kParseError, "missing data chunk");
  if (fmt.channels == 0 || fmt.sample_rate == 0) {
    throw Error(ErrorKind::kParseError, "fmt chunk declares zero channels or rate");
  }
  const bool supported = (fmt.tag == kFormatPcm && (fmt.bits == 16 || fmt.bits == 24)) ||
                         (fmt.tag == kFormatFloat && fmt.bits == 32);
  if (!supported) {
    throw Error(ErrorKind::kUnsupportedFormat,
                "format tag " + std::to_string(fmt.tag) + " with " +
                    std::to_string(fmt.bits) + " bits per sample");
  }
  const std::size_t sample_bytes = fmt.bits / 8;
  if (fmt.block_align != sample_bytes * fmt.channels) {
    throw Error(ErrorKind::kParseError, "block alignment inconsistent with format");
  }
  const std::size_t frames = data_size / fmt.block_align;
  if (frames == 0) throw Error(ErrorKind::kEmptyAudio, "data chunk holds no samples");

  AudioBuffer audio;
  audio.sample_rate = fmt.sample_rate;
  audio.source_id = std::move(source_id);
  audio.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const std::uint8_t* frame = data + i * fmt.block_align;
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt.channels; ++c) {
      acc += DecodeSample(frame + c * sample_bytes, fmt);
    }
    const double v = acc / fmt.channels;
    if (!std::isfinite(v)) throw Error(ErrorKind::kParseError, "non-finite sample");
    audio.samples[i] = v;
  }
  return audio;
}

AudioBuffer ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return DecodeWav(bytes, path.stem().string());
}

std::vector<std::uint8_t> EncodeWav(const AudioBuffer& audio, WavEncoding encoding) {
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16
                             : encoding == WavEncoding::kPcm24 ? 24
                                                               : 32;
  const std::uint16_t tag = encoding == WavEncoding::kFloat32 ? kFormatFloat : kFormatPcm;
  const std::uint16_t block_align = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(audio.samples.size() * block_align);
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  PutTag(out, "RIFF");
  PutU32(out, 36 + data_size);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  PutU32(out, 16);
  PutU16(out, tag);
  PutU16(out, 1);
  PutU32(out, rate);
  PutU32(out, rate * block_align);
  PutU16(out, block_align);
  PutU16(out, bits);
  PutTag(out, "data");
  PutU32(out, data_size);
  for (const double sample : audio.samples) {
    if (encoding == WavEncoding::kFloat32) {
      const float v = static_cast<float>(sample);
      std::uint32_t raw;
      std::memcpy(&raw, &v, sizeof(raw));
      PutU32(out, raw);
    } else if (encoding == WavEncoding::kPcm16) {
      const double scaled = std::clamp(std::round(sample * 32768.0), -32768.0, 32767.0);
      PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
    } else {
      const double scaled = std::clamp(std::round(sample * 8388608.0), -8388608.0, 8388607.0);
      const auto v = static_cast<std::uint32_t>(static_cast<std::int32_t>(scaled));
      out.push_back(static_cast<std::uint8_t>(v & 0xFF));
      out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
      out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    }
  }
  return out;
}

void WriteWav(const std::filesystem::path& path, const AudioBuffer& audio,
              WavEncoding encoding) {
  const auto bytes = EncodeWav(audio, encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

AudioBuffer Resample(const AudioBuffer& audio, double target_rate) {
  if (!(target_rate > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "target rate must be positive");
  }
  if (target_rate == audio.sample_rate) return audio;

  constexpr double kPassband = 0.95;
  constexpr double kZeroCrossings = 32.0;
  constexpr double kKaiserBeta = 8.6;

  const double ratio = target_rate / audio.sample_rate;
  // Cutoff in cycles per input sample, relative to the input Nyquist.
  const double cutoff = kPassband * std::min(1.0, ratio);
  const double half_width = kZeroCrossings / cutoff;
  // Kaiser window tabulated over |r| in [0, 1], linearly interpolated.
  constexpr std::size_t kTableSize = 8192;
  std::vector<double> window_table(kTableSize + 2);
  const double bessel_norm = std::cyl_bessel_i(0.0, kKaiserBeta);
  for (std::size_t i = 0; i <= kTableSize; ++i) {
    const double r = static_cast<double>(i) / kTableSize;
    window_table[i] = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / bessel_norm;
  }
  window_table[kTableSize + 1] = 0.0;

  const auto n_in = static_cast<std::ptrdiff_t>(audio.samples.size());
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(audio.samples.size()) * ratio));

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.source_id = audio.source_id;
  out.samples.resize(n_out);
  for (std::size_t n = 0; n < n_out; ++n) {
    const double center = static_cast<double>(n) / ratio;
    const auto first = std::max<std::ptrdiff_t>(
        0, static_cast<std::ptrdiff_t>(std::ceil(center - half_width)));
    const auto last = std::min<std::ptrdiff_t>(
        n_in - 1, static_cast<std::ptrdiff_t>(std::floor(center + half_width)));
    double acc = 0.0;
    for (std::ptrdiff_t k = first; k <= last; ++k) {
      const double x = static_cast<double>(k) - center;
      const double pos = std::min(1.0, std::abs(x) / half_width) * kTableSize;
      const auto idx = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(idx);
      const double window = window_table[idx] + frac * (window_table[idx + 1] - window_table[idx]);
      acc += audio.samples[static_cast<std::size_t>(k)] * cutoff * Sinc(cutoff * x) * window;
    }
    out.samples[n] = acc;
  }
  return out;
}

TrimResult TrimEndpoints(const AudioBuffer& audio, const VadConfig& config) {
  const auto frame = static_cast<std::size_t>(std::lround(config.frame_seconds * audio.sample_rate));
  const auto hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(config.hop_seconds * audio.sample_rate)));
  TrimResult result{audio, {0, audio.samples.size()}, true};
  if (frame == 0 || audio.samples.size() < frame) return result;

  std::vector<double> rms;
  for (std::size_t start = 0; start + frame <= audio.samples.size(); start += hop) {
    double acc = 0.0;
    for (std::size_t i = start; i < start + frame; ++i) acc += audio.samples[i] * audio.samples[i];
    rms.push_back(std::sqrt(acc / static_cast<double>(frame)));
  }
  const double peak = *std::max_element(rms.begin(), rms.end());
  const double threshold = std::max(config.absolute_floor, config.relative_threshold * peak);

  std::size_t first = rms.size();
  std::size_t last = 0;
  for (std::size_t k = 0; k < rms.size(); ++k) {
    if (rms[k] > threshold) {
      first = std::min(first, k);
      last = k;
    }
  }
  if (first == rms.size()) return result;

  result.no_activity = false;
  result.bounds = {first * hop, last * hop + frame};
  result.audio.samples.assign(
      audio.samples.begin() + static_cast<std::ptrdiff_t>(result.bounds.start_index),
      audio.samples.begin() + static_cast<std::ptrdiff_t>(result.bounds.end_index));
  return result;
}

}  // namespace voxscreen
