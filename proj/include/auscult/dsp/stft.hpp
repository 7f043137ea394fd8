// Copyright 2026 The auscult Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AUSCULT_DSP_STFT_HPP_
#define AUSCULT_DSP_STFT_HPP_

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include <fftw3.h>

#include "auscult/audio.hpp"
#include "auscult/dsp/spectrogram.hpp"
#include "auscult/error.hpp"

namespace auscult::dsp {

struct StftConfig {
  std::size_t window_length = kWindowLength;
  std::size_t hop = kHop;
  std::size_t fft_length = kFftLength;

  void validate() const {
    if (hop == 0 || hop > window_length || window_length > fft_length)
      throw UsageError("StftConfig requires 0 < hop <= window_length <= fft_length");
  }
  std::size_t num_bins() const noexcept { return fft_length / 2 + 1; }
};

// Periodic Hann window.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  return w;
}

namespace stft_detail {

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

// Planning is not thread-safe in FFTW; executing an existing plan on fresh
// aligned arrays is.
inline fftw_plan r2c_plan(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard lock(mutex);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  auto in = fftw_buffer<double>(n);
  auto out = fftw_buffer<fftw_complex>(n / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(),
                                        FFTW_ESTIMATE);
  plans.emplace(n, plan);
  return plan;
}

}  // namespace stft_detail

// Magnitude-squared STFT, (fft_length/2+1) x T. Frame t covers samples
// [t*hop, t*hop + window_length), zero-padded up to fft_length.
inline RealMatrix power_stft(std::span<const float> samples, const StftConfig& cfg = {}) {
  cfg.validate();
  const std::size_t frames = frame_count(samples.size(), cfg.window_length, cfg.hop);
  const std::size_t bins = cfg.num_bins();
  const auto window = hann_window(cfg.window_length);
  RealMatrix power(bins, frames);
  fftw_plan plan = stft_detail::r2c_plan(cfg.fft_length);
  auto in = stft_detail::fftw_buffer<double>(cfg.fft_length);
  auto out = stft_detail::fftw_buffer<fftw_complex>(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * cfg.hop;
    for (std::size_t i = 0; i < cfg.fft_length; ++i) {
      const std::size_t idx = start + i;
      in[i] = i < cfg.window_length && idx < samples.size() ? samples[idx] * window[i] : 0.0;
    }
    fftw_execute_dft_r2c(plan, in.get(), out.get());
    for (std::size_t k = 0; k < bins; ++k)
      power(k, t) = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  }
  return power;
}

inline RealMatrix power_stft(const AudioClip& clip, const StftConfig& cfg = {}) {
  if (clip.sample_rate != kTargetRate)
    throw DataError("power_stft expects 16 kHz audio; resample first");
  return power_stft(std::span<const float>(clip.samples), cfg);
}

}  // namespace auscult::dsp

#endif  // AUSCULT_DSP_STFT_HPP_
