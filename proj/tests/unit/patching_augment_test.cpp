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

#include "auscult/patching.hpp"

#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <random>
#include <set>

#include "auscult/labels.hpp"

namespace auscult {
namespace {

dsp::Spectrogram ramp(std::size_t frames, std::size_t bins = dsp::kNumBins) {
  dsp::Spectrogram s;
  s.bins = bins;
  s.frames = frames;
  s.values.resize(bins * frames);
  for (std::size_t b = 0; b < bins; ++b)
    for (std::size_t t = 0; t < frames; ++t) s(b, t) = static_cast<float>(1000 * b + t);
  return s;
}

Patch random_patch(std::mt19937_64& rng, std::size_t width, std::size_t cls, std::size_t classes) {
  std::normal_distribution<float> g;
  Patch p;
  p.width = width;
  p.pixels.resize(p.height * width);
  for (auto& v : p.pixels) v = g(rng);
  p.label = one_hot(cls, classes);
  return p;
}

double label_sum(const Patch& p) { return std::accumulate(p.label.begin(), p.label.end(), 0.0); }

// ------------------------------------------------------------ split_patches

TEST(SplitPatches, NonOverlappedStarts) {
  auto patches = split_patches(ramp(128), 64, 0.0, one_hot(0, 3));
  ASSERT_EQ(patches.size(), 2u);
  EXPECT_EQ(patches[0].origin.start_frame, 0u);
  EXPECT_EQ(patches[1].origin.start_frame, 64u);
  EXPECT_EQ(patches[1].pixels[0], 64.0f);
}

TEST(SplitPatches, HalfOverlapStarts) {
  auto patches = split_patches(ramp(128), 64, 0.5, one_hot(0, 3));
  ASSERT_EQ(patches.size(), 3u);
  EXPECT_EQ(patches[0].origin.start_frame, 0u);
  EXPECT_EQ(patches[1].origin.start_frame, 32u);
  EXPECT_EQ(patches[2].origin.start_frame, 64u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(patches[i].origin.patch_index, i);
}

TEST(SplitPatches, ShortSpectrogramIsTiled) {
  auto patches = split_patches(ramp(40), 64, 0.0, one_hot(1, 4));
  ASSERT_EQ(patches.size(), 1u);
  const Patch& p = patches[0];
  EXPECT_EQ(p.width, 64u);
  EXPECT_EQ(p.pixels[39], 39.0f);
  EXPECT_EQ(p.pixels[40], 0.0f);
  EXPECT_EQ(p.pixels[63], 23.0f);
  EXPECT_EQ(p.pixels[64 * 5 + 45], 5005.0f);
}

TEST(SplitPatches, FinalWindowIsBackShifted) {
  auto patches = split_patches(ramp(150), 64, 0.0, one_hot(0, 3));
  ASSERT_EQ(patches.size(), 3u);
  EXPECT_EQ(patches[2].origin.start_frame, 86u);
  EXPECT_EQ(patches[2].pixels[63], 149.0f);
}

TEST(SplitPatches, CountFormulaProperty) {
  for (std::size_t width : {32u, 64u, 96u, 128u, 160u})
    for (double overlap : {0.0, 0.5}) {
      const std::size_t hop = patch_hop(width, overlap);
      for (std::size_t t = 1; t <= 400; t += 7) {
        const auto patches = split_patches(ramp(t, 2), width, overlap, one_hot(0, 2));
        const std::size_t over = t > width ? t - width : 0;
        const std::size_t expected = 1 + (over + hop - 1) / hop;
        ASSERT_EQ(patches.size(), expected) << "T=" << t << " W=" << width;
        ASSERT_EQ(patches.size(), patch_count(t, width, hop));
        const std::size_t last = std::max(t, width) - width;
        ASSERT_EQ(patches.back().origin.start_frame, last);
      }
    }
}

TEST(SplitPatches, ConcatenationReconstructsSpectrogram) {
  const auto spec = ramp(4 * 32);
  const auto patches = split_patches(spec, 32, 0.0, one_hot(0, 2));
  ASSERT_EQ(patches.size(), 4u);
  for (std::size_t b = 0; b < spec.bins; ++b)
    for (std::size_t t = 0; t < spec.frames; ++t)
      ASSERT_EQ(patches[t / 32].pixels[b * 32 + t % 32], spec(b, t));
}

TEST(SplitPatches, RejectsBadOverlapAndEmptyInput) {
  EXPECT_THROW(split_patches(ramp(100), 64, 1.0, one_hot(0, 2)), UsageError);
  EXPECT_THROW(split_patches(ramp(100), 64, 0.3, one_hot(0, 2)), UsageError);
  EXPECT_THROW(split_patches(dsp::Spectrogram{}, 64, 0.0, one_hot(0, 2)), ShapeError);
}

// ---------------------------------------------------------- mixup coefficient

TEST(MixupCoeff, DeterministicForSeed) {
  MixupConfig cfg;
  cfg.distribution = MixupDistribution::Uniform;
  std::mt19937_64 a(11), b(11);
  EXPECT_EQ(draw_mixup_coeff(cfg, a), draw_mixup_coeff(cfg, b));
}

TEST(MixupCoeff, BetaMeanAndSupport) {
  MixupConfig cfg;
  std::mt19937_64 rng(5);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double a = draw_mixup_coeff(cfg, rng);
    ASSERT_GE(a, 0.0);
    ASSERT_LE(a, 1.0);
    sum += a;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.01);
}

TEST(MixupCoeff, BetaVarianceMatchesClosedForm) {
  // Var Beta(a,b) = ab / ((a+b)^2 (a+b+1)).
  MixupConfig cfg;
  cfg.a = 2.0;
  cfg.b = 5.0;
  std::mt19937_64 rng(9);
  double s = 0, s2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double a = draw_mixup_coeff(cfg, rng);
    s += a;
    s2 += a * a;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 2.0 / 7.0, 0.005);
  EXPECT_NEAR(var, 10.0 / (49.0 * 8.0), 0.002);
}

TEST(MixupCoeff, UniformSupport) {
  MixupConfig cfg;
  cfg.distribution = MixupDistribution::Uniform;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double a = draw_mixup_coeff(cfg, rng);
    ASSERT_TRUE(a >= 0.0 && a <= 1.0);
  }
}

TEST(MixupCoeff, RejectsNonPositiveBeta) {
  MixupConfig cfg;
  cfg.a = 0.0;
  std::mt19937_64 rng(1);
  EXPECT_THROW(draw_mixup_coeff(cfg, rng), UsageError);
}

// --------------------------------------------------------------- mixup_pair

TEST(MixupPair, IdentityAtOne) {
  std::mt19937_64 rng(2);
  auto p1 = random_patch(rng, 32, 0, 4), p2 = random_patch(rng, 32, 3, 4);
  auto [m1, m2] = mixup_pair(p1, p2, 1.0);
  EXPECT_EQ(m1.pixels, p1.pixels);
  EXPECT_EQ(m2.pixels, p2.pixels);
  EXPECT_EQ(m1.label, p1.label);
  EXPECT_EQ(m2.label, p2.label);
}

TEST(MixupPair, HalfIsSymmetric) {
  std::mt19937_64 rng(3);
  auto p1 = random_patch(rng, 32, 0, 4), p2 = random_patch(rng, 32, 3, 4);
  auto [m1, m2] = mixup_pair(p1, p2, 0.5);
  for (std::size_t i = 0; i < p1.pixels.size(); ++i) {
    EXPECT_FLOAT_EQ(m1.pixels[i], m2.pixels[i]);
    EXPECT_NEAR(m1.pixels[i], 0.5f * (p1.pixels[i] + p2.pixels[i]), 1e-6);
  }
  EXPECT_FLOAT_EQ(m1.label[0], 0.5f);
  EXPECT_FLOAT_EQ(m1.label[3], 0.5f);
}

TEST(MixupPair, ConservationAndSimplexProperty) {
  std::mt19937_64 rng(4);
  MixupConfig cfg;
  for (int trial = 0; trial < 10000; ++trial) {
    auto p1 = random_patch(rng, 8, rng() % 4, 4);
    auto p2 = random_patch(rng, 8, rng() % 4, 4);
    p1.height = p2.height = 4;
    p1.pixels.resize(32);
    p2.pixels.resize(32);
    auto [m1, m2] = mixup_pair(p1, p2, draw_mixup_coeff(cfg, rng));
    for (std::size_t i = 0; i < p1.pixels.size(); ++i)
      ASSERT_NEAR(m1.pixels[i] + m2.pixels[i], p1.pixels[i] + p2.pixels[i], 1e-5);
    for (std::size_t i = 0; i < 4; ++i) {
      ASSERT_NEAR(m1.label[i] + m2.label[i], p1.label[i] + p2.label[i], 1e-6);
      ASSERT_GE(m1.label[i], 0.0f);
      ASSERT_GE(m2.label[i], 0.0f);
    }
    ASSERT_NEAR(label_sum(m1), 1.0, 1e-6);
    ASSERT_NEAR(label_sum(m2), 1.0, 1e-6);
  }
}

TEST(MixupPair, ShapeMismatchThrows) {
  std::mt19937_64 rng(5);
  auto p1 = random_patch(rng, 32, 0, 4), p2 = random_patch(rng, 64, 0, 4);
  EXPECT_THROW(mixup_pair(p1, p2, 0.3), ShapeError);
  auto p3 = random_patch(rng, 32, 0, 3);
  EXPECT_THROW(mixup_pair(p1, p3, 0.3), ShapeError);
}

// -------------------------------------------------------------- mixup_batch

std::vector<Patch> batch_of(std::mt19937_64& rng, const std::vector<std::size_t>& classes,
                            std::size_t num_classes) {
  std::vector<Patch> out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    out.push_back(random_patch(rng, 16, classes[i], num_classes));
    out.back().origin.patch_index = i;
  }
  return out;
}

TEST(MixupBatch, RandomPairingDoubles) {
  std::mt19937_64 rng(6);
  auto batch = batch_of(rng, {0, 1, 2, 0, 1, 2, 0, 1, 2, 0}, 3);
  MixupConfig cfg;
  auto out = mixup_batch(batch, cfg, rng);
  EXPECT_EQ(out.size(), 20u);
  EXPECT_EQ(std::count_if(out.begin(), out.end(), [](const Patch& p) { return p.origin.mixed; }), 10);
  for (const auto& p : out) EXPECT_NEAR(label_sum(p), 1.0, 1e-6);
}

TEST(MixupBatch, OddBatchStillDoubles) {
  std::mt19937_64 rng(7);
  auto batch = batch_of(rng, {0, 1, 2, 0, 1, 2, 0}, 3);
  auto out = mixup_batch(batch, MixupConfig{}, rng);
  EXPECT_EQ(out.size(), 14u);
}

TEST(MixupBatch, DisabledIsIdentity) {
  std::mt19937_64 rng(8);
  auto batch = batch_of(rng, {0, 1, 2, 0}, 3);
  MixupConfig cfg;
  cfg.enabled = false;
  auto out = mixup_batch(batch, cfg, rng);
  ASSERT_EQ(out.size(), batch.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].pixels, batch[i].pixels);
    EXPECT_EQ(out[i].origin.patch_index, i);
  }
}

TEST(MixupBatch, NormalVsCrackleSupport) {
  std::mt19937_64 rng(9);
  const auto n = static_cast<std::size_t>(CycleLabel4::Normal);
  const auto c = static_cast<std::size_t>(CycleLabel4::Crackle);
  auto batch = batch_of(rng, {n, n, n, n, c, c, c, c}, 4);
  MixupConfig cfg;
  cfg.pairing = MixupPairing::NormalVsAnomaly;
  auto out = mixup_batch(batch, cfg, rng);
  ASSERT_EQ(out.size(), 16u);
  int generated = 0;
  for (const auto& p : out) {
    if (!p.origin.mixed) continue;
    ++generated;
    std::set<std::size_t> support;
    for (std::size_t k = 0; k < 4; ++k)
      if (p.label[k] > 0.0f) support.insert(k);
    // Nonzero weight on both sources unless alpha lands exactly on 0 or 1.
    for (std::size_t k : support) EXPECT_TRUE(k == n || k == c);
    EXPECT_NEAR(p.label[n] + p.label[c], 1.0, 1e-6);
    EXPECT_EQ(support.size(), 2u);
  }
  EXPECT_EQ(generated, 8);
}

TEST(MixupBatch, NeverMixesTwoAnomalies) {
  std::mt19937_64 rng(10);
  auto batch = batch_of(rng, {3, 0, 1, 2, 1, 0, 2, 2, 1, 0, 0}, 4);
  MixupConfig cfg;
  cfg.pairing = MixupPairing::NormalVsAnomaly;
  for (int rep = 0; rep < 50; ++rep) {
    auto out = mixup_batch(batch, cfg, rng);
    ASSERT_EQ(out.size(), 22u);
    for (const auto& p : out)
      if (p.origin.mixed) ASSERT_NEAR(p.label[3] + *std::max_element(p.label.begin(), p.label.begin() + 3), 1.0, 1e-6);
  }
}

TEST(MixupBatch, BothExcludedWhenConfigured) {
  std::mt19937_64 rng(11);
  auto batch = batch_of(rng, {3, 3, 2, 2, 0}, 4);
  MixupConfig cfg;
  cfg.pairing = MixupPairing::NormalVsAnomaly;
  cfg.both_as_partner = false;
  auto out = mixup_batch(batch, cfg, rng);
  for (const auto& p : out)
    if (p.origin.mixed) EXPECT_EQ(p.label[2], 0.0f);
}

TEST(MixupBatch, MissingGroupPassesThroughWithWarning) {
  std::mt19937_64 rng(12);
  auto batch = batch_of(rng, {0, 1, 2, 1}, 4);
  MixupConfig cfg;
  cfg.pairing = MixupPairing::NormalVsAnomaly;
  MixupStats stats;
  auto out = mixup_batch(batch, cfg, rng, &stats);
  EXPECT_EQ(out.size(), 4u);
  EXPECT_EQ(stats.passthrough_batches, 1u);
}

TEST(MixupBatch, ReproducibleForSeed) {
  std::mt19937_64 src(13);
  auto batch = batch_of(src, {0, 1, 2, 0, 1, 2, 0, 1, 2}, 3);
  std::mt19937_64 a(99), b(99);
  auto x = mixup_batch(batch, MixupConfig{}, a);
  auto y = mixup_batch(batch, MixupConfig{}, b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].pixels, y[i].pixels);
    EXPECT_EQ(x[i].label, y[i].label);
  }
}

}  // namespace
}  // namespace auscult
