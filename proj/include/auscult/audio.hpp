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

#ifndef AUSCULT_AUDIO_HPP_
#define AUSCULT_AUDIO_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "auscult/error.hpp"
#include "auscult/labels.hpp"

namespace auscult {

struct Provenance {
  std::string recording_id;
  std::string patient_id;
  std::optional<std::size_t> cycle_index;
  std::optional<CycleLabel4> cycle_label;
};

// Mono sample buffer. Samples are nominally in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 0;
  Provenance provenance;

  double duration() const noexcept {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
  bool empty() const noexcept { return samples.empty(); }
};

struct WavInfo {
  int sample_rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
  std::uint16_t format = 0;  // 1 = PCM, 3 = IEEE float
  std::size_t frames = 0;
  double duration() const noexcept {
    return sample_rate > 0 ? static_cast<double>(frames) / sample_rate : 0.0;
  }
};

namespace wav_detail {

inline std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
inline std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

struct Parsed {
  WavInfo info;
  std::size_t data_offset = 0;
  std::size_t data_bytes = 0;
};

inline Parsed parse_header(const std::vector<unsigned char>& bytes,
                           const std::string& where) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw DataError(where + ": not a RIFF/WAVE file");
  Parsed out;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::uint32_t size = le32(chunk + 4);
    std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > bytes.size())
        throw DataError(where + ": truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      out.info.format = le16(f);
      out.info.channels = le16(f + 2);
      out.info.sample_rate = static_cast<int>(le32(f + 4));
      out.info.bits_per_sample = le16(f + 14);
      if (out.info.format == 0xFFFE && size >= 26 && body + 26 <= bytes.size())
        out.info.format = le16(f + 24);  // WAVE_FORMAT_EXTENSIBLE subformat
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw DataError(where + ": data chunk before fmt chunk");
      out.data_offset = body;
      out.data_bytes = size;
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt || out.data_offset == 0)
    throw DataError(where + ": missing fmt or data chunk");
  const auto& info = out.info;
  if (out.data_bytes == 0xFFFFFFFFu) out.data_bytes = 0;  // unknown length
  if (info.channels <= 0 || info.sample_rate <= 0)
    throw DataError(where + ": invalid channel count or sample rate");
  const bool pcm = info.format == 1 &&
                   (info.bits_per_sample == 8 || info.bits_per_sample == 16 ||
                    info.bits_per_sample == 24 || info.bits_per_sample == 32);
  const bool flt = info.format == 3 &&
                   (info.bits_per_sample == 32 || info.bits_per_sample == 64);
  if (!pcm && !flt)
    throw DataError(where + ": unsupported WAV encoding (format " +
                    std::to_string(info.format) + ", " +
                    std::to_string(info.bits_per_sample) + " bits)");
  const std::size_t frame_bytes =
      static_cast<std::size_t>(info.channels) * info.bits_per_sample / 8;
  out.info.frames = out.data_bytes / frame_bytes;
  return out;
}

inline std::vector<unsigned char> slurp(const std::filesystem::path& path,
                                        std::size_t limit = SIZE_MAX) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<unsigned char> bytes;
  if (limit == SIZE_MAX) {
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  } else {
    bytes.resize(limit);
    in.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(limit));
    bytes.resize(static_cast<std::size_t>(in.gcount()));
  }
  return bytes;
}

inline double decode_sample(const unsigned char* p, const WavInfo& info) {
  switch (info.bits_per_sample) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16:
      return static_cast<std::int16_t>(le16(p)) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(
          std::uint32_t(p[0]) << 8 | std::uint32_t(p[1]) << 16 |
          std::uint32_t(p[2]) << 24);
      return (v >> 8) / 8388608.0;
    }
    case 32:
      if (info.format == 3) return std::bit_cast<float>(le32(p));
      return static_cast<std::int32_t>(le32(p)) / 2147483648.0;
    case 64: {
      std::uint64_t u = std::uint64_t(le32(p)) | std::uint64_t(le32(p + 4)) << 32;
      return std::bit_cast<double>(u);
    }
  }
  return 0.0;
}

}  // namespace wav_detail

// Reads only the header; cheap enough for indexing a whole corpus.
inline WavInfo read_wav_info(const std::filesystem::path& path) {
  // Headers of real recordings sit well within the first few KiB, but some
  // writers put LIST chunks first, so fall back to the whole file.
  auto head = wav_detail::slurp(path, 1 << 16);
  try {
    return wav_detail::parse_header(head, path.string()).info;
  } catch (const DataError&) {
    auto all = wav_detail::slurp(path);
    auto parsed = wav_detail::parse_header(all, path.string());
    return parsed.info;
  }
}

// Decodes PCM (8/16/24/32-bit) or IEEE float WAV. Multi-channel input is
// averaged to mono.
inline AudioClip read_wav(const std::filesystem::path& path) {
  auto bytes = wav_detail::slurp(path);
  auto parsed = wav_detail::parse_header(bytes, path.string());
  const WavInfo& info = parsed.info;
  const std::size_t width = static_cast<std::size_t>(info.bits_per_sample) / 8;
  const std::size_t available = (bytes.size() - parsed.data_offset) /
                                (width * static_cast<std::size_t>(info.channels));
  const std::size_t frames =
      parsed.data_bytes == 0 ? available : std::min(info.frames, available);
  AudioClip clip;
  clip.sample_rate = info.sample_rate;
  clip.samples.resize(frames);
  const unsigned char* p = bytes.data() + parsed.data_offset;
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < info.channels; ++c, p += width)
      acc += wav_detail::decode_sample(p, info);
    clip.samples[i] = static_cast<float>(acc / info.channels);
  }
  clip.provenance.recording_id = path.stem().string();
  return clip;
}

// Writes 16-bit PCM (bits = 16) or 32-bit float (bits = 32) mono WAV.
inline void write_wav(const std::filesystem::path& path, const AudioClip& clip,
                      int bits = 16) {
  if (bits != 16 && bits != 32) throw UsageError("write_wav: bits must be 16 or 32");
  std::vector<unsigned char> out;
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
  };
  auto put16 = [&](std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v));
    out.push_back(static_cast<unsigned char>(v >> 8));
  };
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(clip.samples.size() * (bits / 8));
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(16);
  put16(bits == 16 ? 1 : 3);
  put16(1);
  put32(static_cast<std::uint32_t>(clip.sample_rate));
  put32(static_cast<std::uint32_t>(clip.sample_rate * bits / 8));
  put16(static_cast<std::uint16_t>(bits / 8));
  put16(static_cast<std::uint16_t>(bits));
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(data_bytes);
  for (float s : clip.samples) {
    if (bits == 16) {
      double v = std::clamp(static_cast<double>(s), -1.0, 32767.0 / 32768.0);
      put16(static_cast<std::uint16_t>(
          static_cast<std::int16_t>(std::lround(v * 32768.0))));
    } else {
      put32(std::bit_cast<std::uint32_t>(s));
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
}

}  // namespace auscult

#endif  // AUSCULT_AUDIO_HPP_
