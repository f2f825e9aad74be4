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

#include "voxscreen/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "voxscreen/error.hpp"

namespace voxscreen {
namespace {

// FFTW's planner is not re-entrant.
std::mutex& PlannerMutex() {
  static std::mutex mutex;
  return mutex;
}

}  // namespace

struct PowerSpectrum::Plan {
  double* input = nullptr;
  fftw_complex* output = nullptr;
  fftw_plan plan = nullptr;

  explicit Plan(std::size_t n) {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    input = fftw_alloc_real(n);
    output = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), input, output, FFTW_ESTIMATE);
  }
  ~Plan() {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    if (plan != nullptr) fftw_destroy_plan(plan);
    fftw_free(input);
    fftw_free(output);
  }
};

PowerSpectrum::PowerSpectrum(std::size_t fft_size) : fft_size_(fft_size) {
  if (fft_size < 2) throw Error(ErrorKind::kInvalidArgument, "fft size must be >= 2");
  plan_ = std::make_unique<Plan>(fft_size);
}

PowerSpectrum::~PowerSpectrum() = default;
PowerSpectrum::PowerSpectrum(PowerSpectrum&&) noexcept = default;
PowerSpectrum& PowerSpectrum::operator=(PowerSpectrum&&) noexcept = default;

void PowerSpectrum::Compute(std::span<const double> frame, std::vector<double>& power) {
  if (frame.size() > fft_size_) {
    throw Error(ErrorKind::kInvalidArgument, "frame longer than fft size");
  }
  std::copy(frame.begin(), frame.end(), plan_->input);
  std::fill(plan_->input + frame.size(), plan_->input + fft_size_, 0.0);
  fftw_execute(plan_->plan);
  power.resize(num_bins());
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double re = plan_->output[k][0];
    const double im = plan_->output[k][1];
    power[k] = re * re + im * im;
  }
}

std::size_t NextPowerOfTwo(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> HannWindow(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(n) /
                                static_cast<double>(length));
  }
  return w;
}

}  // namespace voxscreen
