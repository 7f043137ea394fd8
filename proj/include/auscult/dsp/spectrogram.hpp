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

#ifndef AUSCULT_DSP_SPECTROGRAM_HPP_
#define AUSCULT_DSP_SPECTROGRAM_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "auscult/audio.hpp"
#include "auscult/binary_io.hpp"
#include "auscult/error.hpp"

namespace auscult::dsp {

inline constexpr int kTargetRate = 16000;
inline constexpr std::size_t kNumBins = 64;
inline constexpr std::size_t kWindowLength = 1024;
inline constexpr std::size_t kHop = 256;
inline constexpr std::size_t kFftLength = 2048;
inline constexpr double kLogFloor = 1e-10;

enum class FrontEnd : std::uint32_t { LogMel = 0, Gamma = 1, MFCC = 2, CQT = 3 };

inline std::string_view to_string(FrontEnd f) noexcept {
  switch (f) {
    case FrontEnd::LogMel: return "logmel";
    case FrontEnd::Gamma: return "gamma";
    case FrontEnd::MFCC: return "mfcc";
    case FrontEnd::CQT: return "cqt";
  }
  return "?";
}

inline FrontEnd parse_frontend(std::string_view name) {
  if (name == "logmel") return FrontEnd::LogMel;
  if (name == "gamma") return FrontEnd::Gamma;
  if (name == "mfcc") return FrontEnd::MFCC;
  if (name == "cqt") return FrontEnd::CQT;
  throw UsageError("unknown frontend '" + std::string(name) + "'");
}

// Dense real matrix, row-major.
struct RealMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  RealMatrix() = default;
  RealMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// bins x frames, row-major (one row per frequency bin).
struct Spectrogram {
  std::size_t bins = 0;
  std::size_t frames = 0;
  std::vector<float> values;
  FrontEnd frontend = FrontEnd::LogMel;
  double frame_hop = static_cast<double>(kHop) / kTargetRate;
  Provenance source;

  float operator()(std::size_t bin, std::size_t frame) const {
    return values[bin * frames + frame];
  }
  float& operator()(std::size_t bin, std::size_t frame) { return values[bin * frames + frame]; }
  double duration() const noexcept { return static_cast<double>(frames) * frame_hop; }
};

// Frames covering [t*hop, t*hop + window); shorter input yields one
// zero-padded frame.
constexpr std::size_t frame_count(std::size_t samples, std::size_t window = kWindowLength,
                                  std::size_t hop = kHop) noexcept {
  return samples <= window ? 1 : 1 + (samples - window) / hop;
}

inline Spectrogram to_log_spectrogram(const RealMatrix& energy, FrontEnd kind,
                                      double floor = kLogFloor) {
  Spectrogram s;
  s.bins = energy.rows;
  s.frames = energy.cols;
  s.frontend = kind;
  s.values.resize(energy.data.size());
  for (std::size_t i = 0; i < energy.data.size(); ++i)
    s.values[i] = static_cast<float>(std::log(energy.data[i] + floor));
  return s;
}

// Zero-mean, unit-variance over the whole spectrogram.
inline void z_normalize(Spectrogram& s) {
  if (s.values.empty()) return;
  double mean = 0.0;
  for (float v : s.values) mean += v;
  mean /= static_cast<double>(s.values.size());
  double var = 0.0;
  for (float v : s.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(s.values.size());
  const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  for (float& v : s.values) v = static_cast<float>((v - mean) * inv);
}

// ---------------------------------------------------------------------------
// Feature cache: "AUSF", version, frontend tag, rows, cols, hop (f64), then
// row-major f32 payload and a CRC32 trailer; all little-endian.

inline constexpr std::uint32_t kFeatureCacheVersion = 1;

inline std::vector<std::uint8_t> encode_feature_cache(const Spectrogram& s) {
  io::ByteWriter w;
  w.raw("AUSF");
  w.u32(kFeatureCacheVersion);
  w.u32(static_cast<std::uint32_t>(s.frontend));
  w.u32(static_cast<std::uint32_t>(s.bins));
  w.u32(static_cast<std::uint32_t>(s.frames));
  w.f64(s.frame_hop);
  for (float v : s.values) w.f32(v);
  w.seal();
  return w.bytes();
}

inline Spectrogram decode_feature_cache(std::span<const std::uint8_t> bytes,
                                        const std::string& what = "feature cache") {
  io::ByteReader r(bytes, what);
  r.verify_seal();
  if (r.raw(4) != "AUSF") throw DataError(what + ": bad magic");
  if (auto v = r.u32(); v != kFeatureCacheVersion)
    throw DataError(what + ": unsupported version " + std::to_string(v));
  Spectrogram s;
  auto tag = r.u32();
  if (tag > 3) throw DataError(what + ": bad frontend tag");
  s.frontend = static_cast<FrontEnd>(tag);
  s.bins = r.u32();
  s.frames = r.u32();
  s.frame_hop = r.f64();
  if (r.remaining() != s.bins * s.frames * 4 + 4) throw DataError(what + ": size mismatch");
  s.values.resize(s.bins * s.frames);
  for (float& v : s.values) v = r.f32();
  return s;
}

inline void write_feature_cache(const std::filesystem::path& path, const Spectrogram& s) {
  io::write_file_atomic(path, encode_feature_cache(s));
}

inline Spectrogram read_feature_cache(const std::filesystem::path& path) {
  return decode_feature_cache(io::read_file(path), path.string());
}

}  // namespace auscult::dsp

#endif  // AUSCULT_DSP_SPECTROGRAM_HPP_
