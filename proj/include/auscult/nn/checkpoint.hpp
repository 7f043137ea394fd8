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

#ifndef AUSCULT_NN_CHECKPOINT_HPP_
#define AUSCULT_NN_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <type_traits>
#include <vector>

#include "auscult/binary_io.hpp"
#include "auscult/nn/param_store.hpp"

namespace auscult::nn {

// Layout (little-endian):
//   "AUSCKPT\0" | u32 version | str arch | u32 classes | u32 experts
//   | u32 n | n x u32 trunk widths
//   | u32 params  | records | u32 buffers | records | u32 crc32
// record: str name | u8 dtype (0 f32, 1 f64) | u8 rank | rank x u64 dims | payload
inline constexpr char kCheckpointMagic[8] = {'A', 'U', 'S', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  std::string arch;  // "cdnn", "cnn_moe" or "student"
  std::uint32_t classes = 0;
  std::uint32_t experts = 0;
  std::vector<std::uint32_t> widths;
};

namespace detail {

template <class T>
void write_record(io::ByteWriter& w, const std::string& name, const Tensor<T>& t) {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  w.str(name);
  w.u8(std::is_same_v<T, float> ? 0 : 1);
  w.u8(static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) w.u64(d);
  for (T v : t.values()) {
    if constexpr (std::is_same_v<T, float>)
      w.f32(v);
    else
      w.f64(v);
  }
}

template <class T>
void read_record(io::ByteReader& r, const std::string& expected_name, Tensor<T>& into) {
  const std::string name = r.str();
  if (name != expected_name)
    throw DataError("checkpoint: expected tensor " + expected_name + ", found " + name);
  const std::uint8_t dtype = r.u8();
  if (dtype > 1) throw DataError("checkpoint: unknown dtype for " + name);
  Shape shape(r.u8());
  for (auto& d : shape) d = r.u64();
  if (shape != into.shape())
    throw DataError("checkpoint: " + name + " has shape " + shape_string(shape) + ", model expects " +
                    shape_string(into.shape()));
  for (auto& v : into.values()) v = static_cast<T>(dtype == 0 ? r.f32() : r.f64());
}

inline CheckpointHeader read_header(io::ByteReader& r) {
  if (r.raw(8) != std::string(kCheckpointMagic, 8)) throw DataError("checkpoint: bad magic");
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  CheckpointHeader h;
  h.arch = r.str();
  h.classes = r.u32();
  h.experts = r.u32();
  h.widths.resize(r.u32());
  for (auto& w : h.widths) w = r.u32();
  return h;
}

}  // namespace detail

template <class T>
std::vector<std::uint8_t> encode_checkpoint(const CheckpointHeader& h, const ParamStore<T>& store) {
  io::ByteWriter w;
  w.raw(std::string_view(kCheckpointMagic, 8));
  w.u32(kCheckpointVersion);
  w.str(h.arch);
  w.u32(h.classes);
  w.u32(h.experts);
  w.u32(static_cast<std::uint32_t>(h.widths.size()));
  for (auto v : h.widths) w.u32(v);
  w.u32(static_cast<std::uint32_t>(store.params().size()));
  for (const auto& p : store.params()) detail::write_record(w, p.name, p.value);
  w.u32(static_cast<std::uint32_t>(store.buffers().size()));
  for (const auto& b : store.buffers()) detail::write_record(w, b.name, b.value);
  w.seal();
  return w.bytes();
}

inline CheckpointHeader decode_checkpoint_header(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes, "checkpoint");
  r.verify_seal();
  return detail::read_header(r);
}

// Fills an already-built store; names and shapes must match exactly.
template <class T>
CheckpointHeader decode_checkpoint(std::span<const std::uint8_t> bytes, ParamStore<T>& store) {
  io::ByteReader r(bytes, "checkpoint");
  r.verify_seal();
  auto h = detail::read_header(r);
  if (r.u32() != store.params().size()) throw DataError("checkpoint: parameter count mismatch");
  for (auto& p : store.params()) detail::read_record(r, p.name, p.value);
  if (r.u32() != store.buffers().size()) throw DataError("checkpoint: buffer count mismatch");
  for (auto& b : store.buffers()) detail::read_record(r, b.name, b.value);
  if (r.remaining() != 4) throw DataError("checkpoint: trailing bytes");
  return h;
}

template <class T>
void save_checkpoint(const std::filesystem::path& path, const CheckpointHeader& h,
                     const ParamStore<T>& store) {
  io::write_file_atomic(path, encode_checkpoint(h, store));
}

}  // namespace auscult::nn

#endif  // AUSCULT_NN_CHECKPOINT_HPP_
