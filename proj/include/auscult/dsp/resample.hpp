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

#ifndef AUSCULT_DSP_RESAMPLE_HPP_
#define AUSCULT_DSP_RESAMPLE_HPP_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "auscult/audio.hpp"
#include "auscult/dsp/spectrogram.hpp"
#include "auscult/error.hpp"

namespace auscult::dsp {

struct ResampleConfig {
  double cutoff_fraction = 0.95;  // of min(native, target) / 2
  int zero_crossings = 16;        // sinc lobes on each side of the centre tap
  double kaiser_beta = 8.0;
  int table_oversampling = 512;   // kernel table points per input sample
};

// Band-limited windowed-sinc resampler. The kernel is tabulated once per
// call and read with linear interpolation.
inline AudioClip resample(const AudioClip& clip, int target = kTargetRate,
                          const ResampleConfig& cfg = {}) {
  if (clip.empty()) throw DataError("resample: empty clip");
  if (clip.sample_rate < 4000 || clip.sample_rate > 48000)
    throw DataError("resample: native rate " + std::to_string(clip.sample_rate) +
                    " Hz outside [4000, 48000]");
  if (clip.sample_rate == target) return clip;

  const double src = clip.sample_rate;
  const double ratio = target / src;
  // Cutoff in cycles per input sample.
  const double cutoff = cfg.cutoff_fraction * std::min(src, double(target)) / 2.0 / src;
  const double half_width = cfg.zero_crossings / (2.0 * cutoff);

  const int per = cfg.table_oversampling;
  const auto table_size = static_cast<std::size_t>(std::ceil(half_width * per)) + 2;
  std::vector<double> table(table_size);
  const double i0_beta = std::cyl_bessel_i(0.0, cfg.kaiser_beta);
  for (std::size_t i = 0; i < table_size; ++i) {
    const double d = static_cast<double>(i) / per;
    if (d >= half_width) {
      table[i] = 0.0;
      continue;
    }
    const double x = 2.0 * cutoff * d;
    const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double r = d / half_width;
    const double win = std::cyl_bessel_i(0.0, cfg.kaiser_beta * std::sqrt(1.0 - r * r)) / i0_beta;
    table[i] = 2.0 * cutoff * sinc * win;
  }
  auto kernel = [&](double d) {
    d = std::abs(d) * per;
    const auto i = static_cast<std::size_t>(d);
    if (i + 1 >= table_size) return 0.0;
    const double frac = d - static_cast<double>(i);
    return table[i] + frac * (table[i + 1] - table[i]);
  };

  const auto n_in = static_cast<long long>(clip.samples.size());
  const auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(n_in) * ratio));
  AudioClip out;
  out.sample_rate = target;
  out.provenance = clip.provenance;
  out.samples.resize(std::max<std::size_t>(n_out, 1));
  for (std::size_t j = 0; j < out.samples.size(); ++j) {
    const double t = static_cast<double>(j) / ratio;
    const auto lo = std::max<long long>(0, static_cast<long long>(std::ceil(t - half_width)));
    const auto hi = std::min<long long>(n_in - 1, static_cast<long long>(std::floor(t + half_width)));
    double acc = 0.0;
    for (long long k = lo; k <= hi; ++k) acc += clip.samples[k] * kernel(t - static_cast<double>(k));
    out.samples[j] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace auscult::dsp

#endif  // AUSCULT_DSP_RESAMPLE_HPP_
