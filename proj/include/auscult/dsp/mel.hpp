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

#ifndef AUSCULT_DSP_MEL_HPP_
#define AUSCULT_DSP_MEL_HPP_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "auscult/audio.hpp"
#include "auscult/dsp/spectrogram.hpp"
#include "auscult/dsp/stft.hpp"

namespace auscult::dsp {

// HTK mel scale.
inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelConfig {
  std::size_t bands = 128;
  double fmin = 0.0;
  double fmax = 8000.0;
  // Pool adjacent band pairs down to 64 rows; false uses a direct 64-band bank.
  bool pool_pairs = true;
};

// Triangular filters on the FFT bin grid, each scaled to unit area
// (2 / (f_right - f_left)).
class MelFilterbank {
 public:
  MelFilterbank(std::size_t bands, std::size_t fft_length, double sample_rate, double fmin,
                double fmax)
      : bands_(bands), bins_(fft_length / 2 + 1), weights_(bands * bins_, 0.0) {
    const double mlo = hz_to_mel(fmin), mhi = hz_to_mel(fmax);
    edges_.resize(bands + 2);
    for (std::size_t i = 0; i < bands + 2; ++i)
      edges_[i] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(i) / static_cast<double>(bands + 1));
    const double bin_hz = sample_rate / static_cast<double>(fft_length);
    for (std::size_t b = 0; b < bands; ++b) {
      const double left = edges_[b], centre = edges_[b + 1], right = edges_[b + 2];
      const double norm = 2.0 / (right - left);
      for (std::size_t k = 0; k < bins_; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        double w = 0.0;
        if (f > left && f <= centre) w = (f - left) / (centre - left);
        else if (f > centre && f < right) w = (right - f) / (right - centre);
        weights_[b * bins_ + k] = w * norm;
      }
    }
  }

  std::size_t bands() const noexcept { return bands_; }
  double centre_hz(std::size_t band) const { return edges_[band + 1]; }
  double weight(std::size_t band, std::size_t bin) const { return weights_[band * bins_ + bin]; }

  // power: bins x T  ->  bands x T
  RealMatrix apply(const RealMatrix& power) const {
    RealMatrix out(bands_, power.cols);
    for (std::size_t b = 0; b < bands_; ++b)
      for (std::size_t k = 0; k < bins_; ++k) {
        const double w = weights_[b * bins_ + k];
        if (w == 0.0) continue;
        const double* row = &power.data[k * power.cols];
        double* dst = &out.data[b * power.cols];
        for (std::size_t t = 0; t < power.cols; ++t) dst[t] += w * row[t];
      }
    return out;
  }

 private:
  std::size_t bands_;
  std::size_t bins_;
  std::vector<double> edges_;
  std::vector<double> weights_;
};

inline const MelFilterbank& default_mel_bank(std::size_t bands) {
  static const MelFilterbank bank128(128, kFftLength, kTargetRate, 0.0, 8000.0);
  static const MelFilterbank bank64(64, kFftLength, kTargetRate, 0.0, 8000.0);
  return bands == 64 ? bank64 : bank128;
}

inline RealMatrix mel_energies(const RealMatrix& power, const MelConfig& cfg = {}) {
  if (cfg.fmin == 0.0 && cfg.fmax == 8000.0 && (cfg.bands == 128 || cfg.bands == 64) &&
      power.rows == kFftLength / 2 + 1)
    return default_mel_bank(cfg.bands).apply(power);
  MelFilterbank bank(cfg.bands, (power.rows - 1) * 2, kTargetRate, cfg.fmin, cfg.fmax);
  return bank.apply(power);
}

// Averages rows (2i, 2i+1).
inline RealMatrix pool_row_pairs(const RealMatrix& m) {
  RealMatrix out(m.rows / 2, m.cols);
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t t = 0; t < m.cols; ++t) out(r, t) = 0.5 * (m(2 * r, t) + m(2 * r + 1, t));
  return out;
}

// 64-row log-mel spectrogram from an STFT power matrix.
inline Spectrogram log_mel(const RealMatrix& power, const MelConfig& cfg = {}) {
  MelConfig c = cfg;
  c.bands = cfg.pool_pairs ? 2 * kNumBins : kNumBins;
  auto mel = mel_energies(power, c);
  if (cfg.pool_pairs) mel = pool_row_pairs(mel);
  return to_log_spectrogram(mel, FrontEnd::LogMel);
}

inline Spectrogram log_mel(const AudioClip& clip, const MelConfig& cfg = {}) {
  auto s = log_mel(power_stft(clip), cfg);
  s.source = clip.provenance;
  return s;
}

// Orthonormal DCT-II basis, `keep` x `n`.
inline RealMatrix dct2_matrix(std::size_t keep, std::size_t n) {
  RealMatrix d(keep, n);
  for (std::size_t k = 0; k < keep; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      d(k, i) = scale * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) *
                                 static_cast<double>(k) / static_cast<double>(n));
  }
  return d;
}

// DCT-II of each log-mel column; log_mel_rows x T -> keep x T.
inline RealMatrix dct_columns(const RealMatrix& log_mel_rows, std::size_t keep) {
  const auto d = dct2_matrix(keep, log_mel_rows.rows);
  RealMatrix out(keep, log_mel_rows.cols);
  for (std::size_t k = 0; k < keep; ++k)
    for (std::size_t i = 0; i < log_mel_rows.rows; ++i) {
      const double w = d(k, i);
      for (std::size_t t = 0; t < log_mel_rows.cols; ++t)
        out(k, t) += w * log_mel_rows(i, t);
    }
  return out;
}

struct MfccConfig {
  std::size_t mel_bands = 128;
  std::size_t coefficients = kNumBins;
};

// Coefficients 0..63 of the DCT of 128-band log-mel frames.
inline Spectrogram mfcc_stack(const AudioClip& clip, const MfccConfig& cfg = {}) {
  MelConfig mc;
  mc.bands = cfg.mel_bands;
  auto mel = mel_energies(power_stft(clip), mc);
  for (double& v : mel.data) v = std::log(v + kLogFloor);
  auto coeffs = dct_columns(mel, cfg.coefficients);
  Spectrogram s;
  s.bins = coeffs.rows;
  s.frames = coeffs.cols;
  s.frontend = FrontEnd::MFCC;
  s.values.assign(coeffs.data.begin(), coeffs.data.end());
  s.source = clip.provenance;
  return s;
}

}  // namespace auscult::dsp

#endif  // AUSCULT_DSP_MEL_HPP_
