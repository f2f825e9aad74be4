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
#include <memory>
#include <span>
#include <vector>

namespace voxscreen {

// One-sided power spectrum |X_k|^2, k = 0..fft_size/2, of a zero-padded real
// frame. Backed by an FFTW plan owned by the instance; an instance is not
// safe for concurrent use, but distinct instances are.
class PowerSpectrum {
 public:
  explicit PowerSpectrum(std::size_t fft_size);
  ~PowerSpectrum();
  PowerSpectrum(PowerSpectrum&&) noexcept;
  PowerSpectrum& operator=(PowerSpectrum&&) noexcept;
  PowerSpectrum(const PowerSpectrum&) = delete;
  PowerSpectrum& operator=(const PowerSpectrum&) = delete;

  std::size_t fft_size() const { return fft_size_; }
  std::size_t num_bins() const { return fft_size_ / 2 + 1; }

  // frame.size() must be <= fft_size; the rest is zero-filled.
  void Compute(std::span<const double> frame, std::vector<double>& power);

 private:
  struct Plan;
  std::size_t fft_size_;
  std::unique_ptr<Plan> plan_;
};

std::size_t NextPowerOfTwo(std::size_t n);

// Hann window, periodic form w[n] = 0.5 - 0.5 cos(2 pi n / N).
std::vector<double> HannWindow(std::size_t length);

}  // namespace voxscreen
