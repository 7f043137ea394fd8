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

#ifndef AUSCULT_MODELS_NETWORK_HPP_
#define AUSCULT_MODELS_NETWORK_HPP_

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "auscult/binary_io.hpp"
#include "auscult/models/moe.hpp"
#include "auscult/nn/checkpoint.hpp"
#include "auscult/nn/layers.hpp"

namespace auscult::models {

enum class Arch { Cdnn, CnnMoe, Student };

inline std::string to_string(Arch a) {
  switch (a) {
    case Arch::Cdnn: return "cdnn";
    case Arch::CnnMoe: return "cnn_moe";
    case Arch::Student: return "student";
  }
  return "?";
}

inline Arch parse_arch(const std::string& s) {
  if (s == "cdnn") return Arch::Cdnn;
  if (s == "cnn_moe" || s == "cnn-moe" || s == "moe") return Arch::CnnMoe;
  if (s == "student") return Arch::Student;
  throw UsageError("unknown model '" + s + "' (expected cdnn, cnn_moe or student)");
}

inline constexpr std::array<std::size_t, 6> kTrunkWidths = {64, 128, 256, 256, 512, 512};
inline constexpr std::array<double, 6> kTrunkDropout = {0.10, 0.15, 0.20, 0.20, 0.25, 0.25};
inline constexpr std::array<bool, 6> kTrunkPool = {true, true, false, true, false, false};
inline constexpr std::array<std::size_t, 2> kStudentWidths = {128, 512};
inline constexpr std::size_t kStudentPool = 4;
inline constexpr std::size_t kDefaultExperts = 10;

struct NetworkSpec {
  Arch arch = Arch::Cdnn;
  std::size_t classes = 4;
  std::size_t experts = kDefaultExperts;  // CnnMoe only
  std::vector<std::size_t> widths;        // empty selects the standard widths

  std::vector<std::size_t> resolved_widths() const {
    if (!widths.empty()) return widths;
    if (arch == Arch::Student) return {kStudentWidths.begin(), kStudentWidths.end()};
    return {kTrunkWidths.begin(), kTrunkWidths.end()};
  }

  void validate() const {
    if (classes < 2) throw UsageError("a network needs at least 2 classes");
    const auto w = resolved_widths();
    const std::size_t blocks = arch == Arch::Student ? 2 : 6;
    if (w.size() != blocks)
      throw UsageError(to_string(arch) + " needs " + std::to_string(blocks) + " trunk widths");
    for (auto v : w)
      if (v == 0) throw UsageError("trunk widths must be positive");
    if (arch == Arch::CnnMoe && experts == 0) throw UsageError("K must be at least 1");
  }
};

// A convolutional trunk ending in global average pooling (the embedding tap)
// followed by a C-DNN dense head or a mixture-of-experts head.
//
//   C-DNN / CNN-MoE blocks: Bn - Cv3x3 - Relu - Bn - [Ap2x2] - Dr, the last
//   block ending in Gap; the block-6 dropout sits between embedding and head.
//   Student: Cv3x3 - Relu - Ap4x4, Cv3x3 - Relu - Gap, then dense.
template <class T>
class Network {
 public:
  struct Output {
    Tensor<T> embedding;
    Tensor<T> logits;
    Tensor<T> probs;
  };

  Network(NetworkSpec spec, std::uint64_t seed)
      : spec_(std::move(spec)), store_(std::make_unique<ParamStore<T>>()) {
    spec_.validate();
    std::mt19937_64 rng(seed);
    const auto w = spec_.resolved_widths();
    auto& s = *store_;
    std::size_t in = 1;
    if (spec_.arch == Arch::Student) {
      for (std::size_t b = 0; b < 2; ++b) {
        const std::string name = "block0" + std::to_string(7 + b);
        trunk_.template emplace<nn::Conv2d<T>>(s, name + "/conv", in, w[b], rng);
        trunk_.template emplace<nn::Relu<T>>();
        if (b == 0)
          trunk_.template emplace<nn::AvgPool<T>>(kStudentPool);
        else
          trunk_.template emplace<nn::GlobalAvgPool<T>>();
        block_ends_.push_back(trunk_.size());
        in = w[b];
      }
    } else {
      for (std::size_t b = 0; b < 6; ++b) {
        const std::string name = "block0" + std::to_string(b + 1);
        trunk_.template emplace<nn::BatchNorm<T>>(s, name + "/bn_in", in);
        trunk_.template emplace<nn::Conv2d<T>>(s, name + "/conv", in, w[b], rng);
        trunk_.template emplace<nn::Relu<T>>();
        trunk_.template emplace<nn::BatchNorm<T>>(s, name + "/bn_out", w[b]);
        if (b == 5) {
          trunk_.template emplace<nn::GlobalAvgPool<T>>();
        } else {
          if (kTrunkPool[b]) trunk_.template emplace<nn::AvgPool<T>>(2);
          trunk_.template emplace<nn::Dropout<T>>(kTrunkDropout[b]);
        }
        block_ends_.push_back(trunk_.size());
        in = w[b];
      }
      head_.template emplace<nn::Dropout<T>>(kTrunkDropout[5]);
    }
    embedding_dim_ = in;
    if (spec_.arch == Arch::CnnMoe)
      moe_ = &head_.template emplace<MixtureOfExperts<T>>(s, "moe", in, spec_.experts,
                                                          spec_.classes, rng);
    else
      head_.template emplace<nn::Dense<T>>(s, "dense", in, spec_.classes, rng);
  }

  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  Output forward(const Tensor<T>& x, const Context& ctx) {
    check_input(x.shape());
    Output out;
    out.embedding = trunk_.forward(x, ctx);
    out.logits = head_.forward(out.embedding, ctx);
    out.probs = nn::softmax(out.logits);
    return out;
  }

  // dlogits: gradient at the head logits; demb: optional extra gradient
  // injected at the embedding tap (distillation).
  void backward(const Tensor<T>& dlogits, const Tensor<T>* demb = nullptr) {
    Tensor<T> g = head_.backward(dlogits);
    if (demb) g += *demb;
    trunk_.backward(g);
  }

  // Output shape of every block for a (1, 64, W, 1) input, then the head.
  std::vector<Shape> block_shapes(std::size_t height, std::size_t width) const {
    std::vector<Shape> out;
    const auto trace = trunk_.trace({1, height, width, 1});
    for (auto e : block_ends_) out.push_back(trace[e - 1].second);
    out.push_back(head_.output_shape(out.back()));
    return out;
  }

  void check_input(const Shape& s) const {
    nn::require_rank(s, 4, to_string(spec_.arch).c_str());
    if (s[3] != 1) throw ShapeError("network input must have one channel");
    trunk_.output_shape(s);  // throws on indivisible pooling
  }

  ParamStore<T>& params() noexcept { return *store_; }
  const ParamStore<T>& params() const noexcept { return *store_; }
  const NetworkSpec& spec() const noexcept { return spec_; }
  std::size_t embedding_dim() const noexcept { return embedding_dim_; }
  std::size_t classes() const noexcept { return spec_.classes; }
  MixtureOfExperts<T>* moe() noexcept { return moe_; }

  nn::CheckpointHeader header() const {
    nn::CheckpointHeader h;
    h.arch = to_string(spec_.arch);
    h.classes = static_cast<std::uint32_t>(spec_.classes);
    h.experts = spec_.arch == Arch::CnnMoe ? static_cast<std::uint32_t>(spec_.experts) : 0;
    for (auto v : spec_.resolved_widths()) h.widths.push_back(static_cast<std::uint32_t>(v));
    return h;
  }

  std::vector<std::uint8_t> encode() const { return nn::encode_checkpoint(header(), *store_); }
  void save(const std::filesystem::path& path) const { io::write_file_atomic(path, encode()); }

 private:
  NetworkSpec spec_;
  std::unique_ptr<ParamStore<T>> store_;
  nn::Sequential<T> trunk_;
  nn::Sequential<T> head_;
  std::vector<std::size_t> block_ends_;
  std::size_t embedding_dim_ = 0;
  MixtureOfExperts<T>* moe_ = nullptr;
};

template <class T = float>
Network<T> build_cdnn(std::size_t classes, std::uint64_t seed = 0,
                      std::vector<std::size_t> widths = {}) {
  return Network<T>({Arch::Cdnn, classes, 0, std::move(widths)}, seed);
}

template <class T = float>
Network<T> build_cnn_moe(std::size_t classes, std::size_t experts = kDefaultExperts,
                         std::uint64_t seed = 0, std::vector<std::size_t> widths = {}) {
  return Network<T>({Arch::CnnMoe, classes, experts, std::move(widths)}, seed);
}

template <class T = float>
Network<T> build_student(std::size_t classes = 3, std::uint64_t seed = 0,
                         std::vector<std::size_t> widths = {}) {
  return Network<T>({Arch::Student, classes, 0, std::move(widths)}, seed);
}

inline NetworkSpec spec_from_header(const nn::CheckpointHeader& h) {
  NetworkSpec s;
  s.arch = parse_arch(h.arch);
  s.classes = h.classes;
  s.experts = s.arch == Arch::CnnMoe ? h.experts : 0;
  s.widths.assign(h.widths.begin(), h.widths.end());
  return s;
}

template <class T = float>
Network<T> decode_network(std::span<const std::uint8_t> bytes) {
  Network<T> net(spec_from_header(nn::decode_checkpoint_header(bytes)), 0);
  nn::decode_checkpoint(bytes, net.params());
  return net;
}

template <class T = float>
Network<T> load_network(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return decode_network<T>(bytes);
}

template <class T>
std::size_t count_params(const Network<T>& net) {
  return nn::count_params(net.params());
}

}  // namespace auscult::models

#endif  // AUSCULT_MODELS_NETWORK_HPP_
