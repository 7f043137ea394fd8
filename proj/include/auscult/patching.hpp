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

#ifndef AUSCULT_PATCHING_HPP_
#define AUSCULT_PATCHING_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "auscult/dsp/spectrogram.hpp"
#include "auscult/error.hpp"

namespace auscult {

struct PatchOrigin {
  std::string instance_id;  // recording id, or recording id + cycle for Task 1
  std::optional<std::size_t> cycle_index;
  std::size_t patch_index = 0;
  std::size_t start_frame = 0;
  bool mixed = false;
};

// 64 x width window, row-major (frequency rows, time columns), with a soft
// label on the probability simplex.
struct Patch {
  std::size_t height = dsp::kNumBins;
  std::size_t width = 0;
  std::vector<float> pixels;
  std::vector<float> label;
  PatchOrigin origin;

  std::size_t argmax_label() const {
    return static_cast<std::size_t>(std::max_element(label.begin(), label.end()) - label.begin());
  }
};

inline std::vector<float> one_hot(std::size_t cls, std::size_t classes) {
  if (cls >= classes) throw ShapeError("one_hot: class index out of range");
  std::vector<float> v(classes, 0.0f);
  v[cls] = 1.0f;
  return v;
}

// Patch count for T frames: 1 + ceil(max(0, T - W) / hop).
constexpr std::size_t patch_count(std::size_t frames, std::size_t width, std::size_t hop) noexcept {
  const std::size_t t = std::max(frames, width);
  return 1 + (t - width + hop - 1) / hop;
}

inline std::size_t patch_hop(std::size_t width, double overlap) {
  if (!(overlap >= 0.0 && overlap < 1.0)) throw UsageError("patch overlap must be in [0, 1)");
  const double hop = static_cast<double>(width) * (1.0 - overlap);
  const auto h = static_cast<std::size_t>(std::llround(hop));
  if (h == 0 || std::abs(hop - static_cast<double>(h)) > 1e-9)
    throw UsageError("patch width * (1 - overlap) must be a positive integer");
  return h;
}

// Cuts a spectrogram into width-W windows every W*(1-overlap) frames. A
// spectrogram shorter than W is first tiled in time to W frames; a trailing
// partial window is moved back to end on the last frame.
inline std::vector<Patch> split_patches(const dsp::Spectrogram& spec, std::size_t width,
                                        double overlap, const std::vector<float>& label,
                                        const std::string& instance_id = {}) {
  if (spec.frames == 0 || spec.bins == 0) throw ShapeError("split_patches: empty spectrogram");
  if (width == 0) throw UsageError("patch width must be positive");
  const std::size_t hop = patch_hop(width, overlap);
  const std::size_t frames = std::max(spec.frames, width);
  auto column = [&](std::size_t t) { return t % spec.frames; };

  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + width <= frames; s += hop) starts.push_back(s);
  if (starts.back() + width < frames) starts.push_back(frames - width);

  std::vector<Patch> out;
  out.reserve(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    Patch p;
    p.height = spec.bins;
    p.width = width;
    p.pixels.resize(spec.bins * width);
    for (std::size_t b = 0; b < spec.bins; ++b)
      for (std::size_t w = 0; w < width; ++w)
        p.pixels[b * width + w] = spec(b, column(starts[i] + w));
    p.label = label;
    p.origin.instance_id = instance_id;
    p.origin.cycle_index = spec.source.cycle_index;
    p.origin.patch_index = i;
    p.origin.start_frame = starts[i];
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mixup

enum class MixupDistribution { Uniform, Beta };
enum class MixupPairing { NormalVsAnomaly, Random };

struct MixupConfig {
  bool enabled = true;
  MixupDistribution distribution = MixupDistribution::Beta;
  double a = 0.4;
  double b = 0.4;
  MixupPairing pairing = MixupPairing::Random;
  std::size_t normal_class = 3;  // used by NormalVsAnomaly
  std::size_t both_class = 2;
  bool both_as_partner = true;  // false drops Both-labeled patches as sources

  void validate() const {
    if (distribution == MixupDistribution::Beta && !(a > 0.0 && b > 0.0))
      throw UsageError("beta mixup parameters must be positive");
  }
};

struct MixupStats {
  std::size_t passthrough_batches = 0;  // batches left un-augmented
  std::size_t generated = 0;
};

template <class Rng>
double draw_mixup_coeff(const MixupConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.distribution == MixupDistribution::Uniform)
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  // Beta(a, b) = Ga / (Ga + Gb).
  const double x = std::gamma_distribution<double>(cfg.a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(cfg.b, 1.0)(rng);
  return x + y > 0.0 ? x / (x + y) : 0.5;
}

// X_mp1 = a X1 + (1-a) X2, X_mp2 = (1-a) X1 + a X2; labels likewise.
inline std::pair<Patch, Patch> mixup_pair(const Patch& p1, const Patch& p2, double alpha) {
  if (p1.height != p2.height || p1.width != p2.width || p1.pixels.size() != p2.pixels.size())
    throw ShapeError("mixup_pair: patch shapes differ");
  if (p1.label.size() != p2.label.size()) throw ShapeError("mixup_pair: label lengths differ");
  const auto a = static_cast<float>(alpha);
  const auto b = static_cast<float>(1.0 - alpha);
  Patch m1 = p1, m2 = p1;
  for (std::size_t i = 0; i < p1.pixels.size(); ++i) {
    m1.pixels[i] = a * p1.pixels[i] + b * p2.pixels[i];
    m2.pixels[i] = b * p1.pixels[i] + a * p2.pixels[i];
  }
  for (std::size_t i = 0; i < p1.label.size(); ++i) {
    m1.label[i] = a * p1.label[i] + b * p2.label[i];
    m2.label[i] = b * p1.label[i] + a * p2.label[i];
  }
  m1.origin.mixed = m2.origin.mixed = true;
  return {std::move(m1), std::move(m2)};
}

// Appends one mixed patch per input patch and shuffles the result. Random
// pairing draws pairs without replacement; NormalVsAnomaly always pairs a
// Normal patch with a non-Normal one and never two anomalies together.
template <class Rng>
std::vector<Patch> mixup_batch(const std::vector<Patch>& patches, const MixupConfig& cfg, Rng& rng,
                               MixupStats* stats = nullptr) {
  if (!cfg.enabled || patches.empty()) return patches;
  cfg.validate();
  const std::size_t n = patches.size();
  std::vector<Patch> out = patches;
  out.reserve(2 * n);
  std::size_t generated = 0;
  auto emit = [&](const Patch& x, const Patch& y, bool both) {
    auto [m1, m2] = mixup_pair(x, y, draw_mixup_coeff(cfg, rng));
    out.push_back(std::move(m1));
    ++generated;
    if (both) {
      out.push_back(std::move(m2));
      ++generated;
    }
  };

  if (cfg.pairing == MixupPairing::Random) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i + 1 < n; i += 2) emit(patches[order[i]], patches[order[i + 1]], true);
    if (n % 2 == 1 && n > 1) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 2);
      emit(patches[order[n - 1]], patches[order[pick(rng)]], false);
    }
  } else {
    std::vector<std::size_t> normals, anomalies;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t cls = patches[i].argmax_label();
      if (cls == cfg.normal_class)
        normals.push_back(i);
      else if (cfg.both_as_partner || cls != cfg.both_class)
        anomalies.push_back(i);
    }
    if (normals.empty() || anomalies.empty()) {
      if (stats) ++stats->passthrough_batches;
      return patches;
    }
    std::shuffle(normals.begin(), normals.end(), rng);
    std::shuffle(anomalies.begin(), anomalies.end(), rng);
    for (std::size_t i = 0; generated < n; ++i) {
      if (i > 0 && i % normals.size() == 0) std::shuffle(normals.begin(), normals.end(), rng);
      if (i > 0 && i % anomalies.size() == 0) std::shuffle(anomalies.begin(), anomalies.end(), rng);
      emit(patches[normals[i % normals.size()]], patches[anomalies[i % anomalies.size()]],
           n - generated >= 2);
    }
  }
  if (stats) stats->generated += generated;
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace auscult

#endif  // AUSCULT_PATCHING_HPP_
