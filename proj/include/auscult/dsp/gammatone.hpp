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

#ifndef AUSCULT_DSP_GAMMATONE_HPP_
#define AUSCULT_DSP_GAMMATONE_HPP_

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "auscult/audio.hpp"
#include "auscult/dsp/spectrogram.hpp"
#include "auscult/error.hpp"

namespace auscult::dsp {

// Glasberg & Moore ERB-rate scale and equivalent rectangular bandwidth.
inline double hz_to_erb_rate(double hz) { return 21.4 * std::log10(1.0 + 0.00437 * hz); }
inline double erb_rate_to_hz(double erb) { return (std::pow(10.0, erb / 21.4) - 1.0) / 0.00437; }
inline double erb_bandwidth(double hz) { return 24.7 * (0.00437 * hz + 1.0); }

struct GammatoneConfig {
  std::size_t channels = kNumBins;
  int order = 4;
  double fmin = 50.0;
  double fmax = 8000.0;
  double bandwidth_scale = 1.019;
};

// Centre frequencies equally spaced on the ERB-rate scale, fmin and fmax
// inclusive.
inline std::vector<double> gammatone_centres(const GammatoneConfig& cfg = {}) {
  std::vector<double> f(cfg.channels);
  const double lo = hz_to_erb_rate(cfg.fmin), hi = hz_to_erb_rate(cfg.fmax);
  for (std::size_t c = 0; c < cfg.channels; ++c) {
    const double e = cfg.channels == 1
                         ? lo
                         : lo + (hi - lo) * static_cast<double>(c) / static_cast<double>(cfg.channels - 1);
    f[c] = erb_rate_to_hz(e);
  }
  f.front() = cfg.fmin;
  if (cfg.channels > 1) f.back() = cfg.fmax;
  return f;
}

// Complex gammatone channel: `order` cascaded one-pole resonators with pole
// r*exp(j*2*pi*fc/fs), r = exp(-2*pi*b/fs). The impulse response envelope is
// t^(order-1) r^t, i.e. the gammatone, and the gain is unity at fc. Output is
// the complex (analytic) response, so |y|^2 is the channel envelope energy.
inline std::vector<std::complex<double>> gammatone_channel(std::span<const float> x, double fc,
                                                           double fs, const GammatoneConfig& cfg) {
  const double b = cfg.bandwidth_scale * erb_bandwidth(fc);
  const double r = std::exp(-2.0 * std::numbers::pi * b / fs);
  const std::complex<double> pole = std::polar(r, 2.0 * std::numbers::pi * fc / fs);
  const double stage_gain = 1.0 - r;
  std::vector<std::complex<double>> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i];
  for (int s = 0; s < cfg.order; ++s) {
    std::complex<double> prev = 0.0;
    for (auto& v : y) {
      prev = stage_gain * v + pole * prev;
      v = prev;
    }
  }
  return y;
}

// 64 x T log energy; frame t is the mean envelope energy over samples
// [t*hop, t*hop + window).
inline Spectrogram gammatone_spec(const AudioClip& clip, const GammatoneConfig& cfg = {}) {
  if (clip.sample_rate != kTargetRate)
    throw DataError("gammatone_spec expects 16 kHz audio; resample first");
  if (cfg.order < 1) throw UsageError("gammatone order must be >= 1");
  const auto centres = gammatone_centres(cfg);
  const std::size_t frames = frame_count(clip.samples.size());
  RealMatrix energy(cfg.channels, frames);
  for (std::size_t c = 0; c < cfg.channels; ++c) {
    const auto y = gammatone_channel(clip.samples, centres[c], clip.sample_rate, cfg);
    for (std::size_t t = 0; t < frames; ++t) {
      const std::size_t a = std::min(t * kHop, y.size());
      const std::size_t e = std::min(t * kHop + kWindowLength, y.size());
      double sum = 0.0;
      for (std::size_t i = a; i < e; ++i) sum += std::norm(y[i]);
      energy(c, t) = sum / static_cast<double>(kWindowLength);
    }
  }
  auto s = to_log_spectrogram(energy, FrontEnd::Gamma);
  s.source = clip.provenance;
  return s;
}

}  // namespace auscult::dsp

#endif  // AUSCULT_DSP_GAMMATONE_HPP_
