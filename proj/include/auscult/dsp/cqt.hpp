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

#ifndef AUSCULT_DSP_CQT_HPP_
#define AUSCULT_DSP_CQT_HPP_

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "auscult/audio.hpp"
#include "auscult/dsp/spectrogram.hpp"
#include "auscult/dsp/stft.hpp"
#include "auscult/error.hpp"

namespace auscult::dsp {

struct CqtConfig {
  std::size_t bins = kNumBins;
  int bins_per_octave = 8;
  double fmin = 32.70;  // C1
  // Upper limit on bin centres, as a fraction of Nyquist. With the default
  // geometry the top bin sits at 7.72 kHz, above 0.95 * Nyquist but below
  // Nyquist itself, so the default limit is Nyquist.
  double max_fraction_of_nyquist = 1.0;
};

inline std::vector<double> cqt_centres(const CqtConfig& cfg = {}) {
  std::vector<double> f(cfg.bins);
  for (std::size_t k = 0; k < cfg.bins; ++k)
    f[k] = cfg.fmin * std::pow(2.0, static_cast<double>(k) / cfg.bins_per_octave);
  return f;
}

// Direct-evaluation constant-Q transform on the rectangular 256-sample frame
// grid: every bin is sampled at every hop, frame t centred on sample
// t*hop + window/2 (the centre of the matching STFT frame). Bin k uses a
// Hann-windowed complex exponential of length Q*fs/f_k normalised to unit
// window sum, so a unit sinusoid at f_k reads 0.5.
class ConstantQ {
 public:
  explicit ConstantQ(const CqtConfig& cfg = {}, double fs = kTargetRate) : cfg_(cfg) {
    centres_ = cqt_centres(cfg);
    if (centres_.back() >= cfg.max_fraction_of_nyquist * fs / 2.0)
      throw UsageError("CQT top bin exceeds the allowed fraction of Nyquist");
    const double q = 1.0 / (std::pow(2.0, 1.0 / cfg.bins_per_octave) - 1.0);
    kernels_.resize(cfg.bins);
    for (std::size_t k = 0; k < cfg.bins; ++k) {
      const auto len = static_cast<std::size_t>(std::ceil(q * fs / centres_[k]));
      const auto window = hann_window(len);
      double wsum = 0.0;
      for (double w : window) wsum += w;
      auto& kern = kernels_[k];
      kern.resize(len);
      for (std::size_t n = 0; n < len; ++n)
        kern[n] = std::polar(window[n] / wsum,
                             -2.0 * std::numbers::pi * centres_[k] * static_cast<double>(n) / fs);
    }
  }

  const std::vector<double>& centres() const noexcept { return centres_; }

  RealMatrix magnitude(std::span<const float> x) const {
    const std::size_t frames = frame_count(x.size());
    RealMatrix out(cfg_.bins, frames);
    const auto n = static_cast<long long>(x.size());
    for (std::size_t t = 0; t < frames; ++t) {
      const auto centre = static_cast<long long>(t * kHop + kWindowLength / 2);
      for (std::size_t k = 0; k < cfg_.bins; ++k) {
        const auto& kern = kernels_[k];
        const long long start = centre - static_cast<long long>(kern.size() / 2);
        const long long lo = std::max<long long>(0, -start);
        const long long hi = std::min<long long>(static_cast<long long>(kern.size()), n - start);
        std::complex<double> acc = 0.0;
        for (long long i = lo; i < hi; ++i) acc += static_cast<double>(x[start + i]) * kern[i];
        out(k, t) = std::abs(acc);
      }
    }
    return out;
  }

 private:
  CqtConfig cfg_;
  std::vector<double> centres_;
  std::vector<std::vector<std::complex<double>>> kernels_;
};

inline Spectrogram cqt_spec(const AudioClip& clip, const CqtConfig& cfg = {}) {
  if (clip.sample_rate != kTargetRate)
    throw DataError("cqt_spec expects 16 kHz audio; resample first");
  static const ConstantQ default_cqt{};
  const bool is_default = cfg.bins == kNumBins && cfg.bins_per_octave == 8 && cfg.fmin == 32.70 &&
                          cfg.max_fraction_of_nyquist == 1.0;
  auto mag = is_default ? default_cqt.magnitude(clip.samples) : ConstantQ(cfg).magnitude(clip.samples);
  auto s = to_log_spectrogram(mag, FrontEnd::CQT);
  s.source = clip.provenance;
  return s;
}

}  // namespace auscult::dsp

#endif  // AUSCULT_DSP_CQT_HPP_
