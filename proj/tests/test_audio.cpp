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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "signals.hpp"
#include "voxscreen/audio.hpp"
#include "voxscreen/error.hpp"

using namespace voxscreen;
using namespace voxscreen::testing;

namespace {

ErrorKind DecodeErrorKind(const std::vector<std::uint8_t>& bytes) {
  try {
    DecodeWav(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("decode unexpectedly succeeded");
  return ErrorKind::kUndefined;
}

// Index of the strongest DFT bin, by direct summation.
std::size_t PeakBin(const std::vector<double>& x) {
  const auto power = BruteForcePower(x, x.size());
  return static_cast<std::size_t>(std::max_element(power.begin() + 1, power.end()) - power.begin());
}

bool AllFinite(const AudioBuffer& b) {
  return std::all_of(b.samples.begin(), b.samples.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

TEST_CASE("one second of 16-bit silence decodes to zeros") {
  const auto bytes = EncodeWav(MakeBuffer(std::vector<double>(16000, 0.0)), WavEncoding::kPcm16);
  const auto audio = DecodeWav(bytes);
  CHECK(audio.sample_rate == 16000.0);
  REQUIRE(audio.size() == 16000);
  CHECK(std::all_of(audio.samples.begin(), audio.samples.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("float-32 round trip is exact to float precision") {
  const auto sine = Sine(440.0, 0.5, 16000.0, 0.8);
  const auto audio = DecodeWav(EncodeWav(MakeBuffer(sine), WavEncoding::kFloat32));
  REQUIRE(audio.size() == sine.size());
  for (std::size_t i = 0; i < sine.size(); ++i) {
    CHECK(std::abs(audio.samples[i] - sine[i]) <= 0x1.0p-24);
  }
}

TEST_CASE("PCM round trips are within one quantization step") {
  const auto sine = Sine(440.0, 0.1, 16000.0, 0.5);
  const auto pcm16 = DecodeWav(EncodeWav(MakeBuffer(sine), WavEncoding::kPcm16));
  const auto pcm24 = DecodeWav(EncodeWav(MakeBuffer(sine), WavEncoding::kPcm24));
  for (std::size_t i = 0; i < sine.size(); ++i) {
    CHECK(std::abs(pcm16.samples[i] - sine[i]) <= 1.0 / 32768.0);
    CHECK(std::abs(pcm24.samples[i] - sine[i]) <= 1.0 / 8388608.0);
  }
}

TEST_CASE("multi-channel input is averaged to mono") {
  // Two-channel 16-bit file: left = 0.5, right = -0.25.
  auto bytes = EncodeWav(MakeBuffer({0.0, 0.0}), WavEncoding::kPcm16);
  // Rewrite the header for 2 channels holding one frame.
  bytes[22] = 2;
  bytes[32] = 4;  // block align
  const std::int16_t left = 16384, right = -8192;
  bytes[44] = static_cast<std::uint8_t>(left & 0xFF);
  bytes[45] = static_cast<std::uint8_t>((left >> 8) & 0xFF);
  bytes[46] = static_cast<std::uint8_t>(right & 0xFF);
  bytes[47] = static_cast<std::uint8_t>((right >> 8) & 0xFF);
  const auto audio = DecodeWav(bytes);
  REQUIRE(audio.size() == 1);
  CHECK(audio.samples[0] == doctest::Approx(0.125));
}

TEST_CASE("malformed and unsupported files are rejected with their kind") {
  auto bytes = EncodeWav(MakeBuffer({0.1, 0.2}), WavEncoding::kPcm16);

  auto rifx = bytes;
  rifx[3] = 'X';
  CHECK(DecodeErrorKind(rifx) == ErrorKind::kParseError);

  auto truncated = std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 20);
  CHECK(DecodeErrorKind(truncated) == ErrorKind::kParseError);

  auto adpcm = bytes;
  adpcm[20] = 2;
  CHECK(DecodeErrorKind(adpcm) == ErrorKind::kUnsupportedFormat);

  auto eight_bit = bytes;
  eight_bit[34] = 8;
  CHECK(DecodeErrorKind(eight_bit) == ErrorKind::kUnsupportedFormat);

  const auto empty = EncodeWav(MakeBuffer({}), WavEncoding::kPcm16);
  CHECK(DecodeErrorKind(empty) == ErrorKind::kEmptyAudio);
}

TEST_CASE("resample to the same rate is the identity") {
  const auto x = MakeBuffer(WhiteNoise(1000, 3));
  const auto y = Resample(x, 16000.0);
  CHECK(y.samples == x.samples);
}

TEST_CASE("resample preserves duration") {
  const auto x = MakeBuffer(WhiteNoise(44100, 5, 0.1), 44100.0);
  const auto y = Resample(x, 16000.0);
  CHECK(y.sample_rate == 16000.0);
  CHECK(std::abs(static_cast<long>(y.size()) - 16000L) <= 1);
  CHECK(AllFinite(y));
}

TEST_CASE("resample keeps a 100 Hz tone at 100 Hz") {
  const auto x = MakeBuffer(Sine(100.0, 0.25, 48000.0), 48000.0);
  const auto y = Resample(x, 16000.0);
  REQUIRE(y.size() == 4000);
  // 0.25 s window: bins are 4 Hz wide, so 100 Hz is bin 25.
  const auto bin = PeakBin(y.samples);
  CHECK(std::abs(static_cast<long>(bin) - 25L) <= 1);
}

TEST_CASE("resample round trip of a band-limited signal") {
  std::vector<double> x(16000, 0.0);
  for (const double hz : {137.0, 610.0, 1830.0, 3300.0}) {
    const auto s = Sine(hz, 1.0, 16000.0, 0.2, hz / 1000.0);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += s[i];
  }
  for (const double rate : {48000.0, 44100.0, 22050.0}) {
    const auto back = Resample(Resample(MakeBuffer(x), rate), 16000.0);
    REQUIRE(back.size() == x.size());
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      err += (back.samples[i] - x[i]) * (back.samples[i] - x[i]);
      ref += x[i] * x[i];
    }
    CAPTURE(rate);
    CHECK(std::sqrt(err / ref) <= 1e-2);
  }
}

TEST_CASE("resample rejects a non-positive rate") {
  CHECK_THROWS_AS(Resample(MakeBuffer({0.0}), 0.0), Error);
  CHECK_THROWS_AS(Resample(MakeBuffer({0.0}), -8000.0), Error);
}

TEST_CASE("trimming removes leading and trailing silence") {
  const auto x = Concat({std::vector<double>(8000, 0.0), Sine(220.0, 1.0), std::vector<double>(8000, 0.0)});
  const auto trimmed = TrimEndpoints(MakeBuffer(x));
  CHECK_FALSE(trimmed.no_activity);
  CHECK(std::abs(trimmed.audio.duration() - 1.0) <= 0.060);
  // Contiguous, sample-exact sub-sequence.
  REQUIRE(trimmed.bounds.end_index - trimmed.bounds.start_index == trimmed.audio.size());
  CHECK(std::equal(trimmed.audio.samples.begin(), trimmed.audio.samples.end(),
                   x.begin() + static_cast<std::ptrdiff_t>(trimmed.bounds.start_index)));
}

TEST_CASE("all-silence input passes through untrimmed") {
  const auto x = MakeBuffer(std::vector<double>(16000, 0.0));
  const auto trimmed = TrimEndpoints(x);
  CHECK(trimmed.no_activity);
  CHECK(trimmed.bounds.start_index == 0);
  CHECK(trimmed.bounds.end_index == x.size());
  CHECK(trimmed.audio.samples == x.samples);
}

TEST_CASE("already-trimmed chirp keeps nearly all of its span") {
  std::vector<double> x(24000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = i / 16000.0;
    // 120 Hz rising to 300 Hz with a syllable-like envelope that never drops to zero.
    const double envelope = 0.6 + 0.4 * std::sin(2.0 * M_PI * 3.0 * t);
    x[i] = envelope * std::sin(2.0 * M_PI * (120.0 * t + 0.5 * 120.0 * t * t));
  }
  const auto trimmed = TrimEndpoints(MakeBuffer(x));
  const double kept = static_cast<double>(trimmed.bounds.end_index - trimmed.bounds.start_index);
  CHECK(kept / x.size() >= 0.95);
}
