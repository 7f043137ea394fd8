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

#ifndef AUSCULT_NN_PARAM_STORE_HPP_
#define AUSCULT_NN_PARAM_STORE_HPP_

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "auscult/nn/tensor.hpp"

namespace auscult::nn {

template <class T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> m;  // Adam first moment
  Tensor<T> v;  // Adam second moment
};

// Named trainable tensors in insertion order plus non-trainable buffers
// (batch-norm running statistics). Layers refer to entries by index.
template <class T>
class ParamStore {
 public:
  std::size_t add(const std::string& name, Shape shape) {
    claim(name);
    Param<T> p{name, Tensor<T>(shape), Tensor<T>(shape), Tensor<T>(shape), Tensor<T>(shape)};
    params_.push_back(std::move(p));
    return params_.size() - 1;
  }

  std::size_t add_buffer(const std::string& name, Shape shape, T fill = T(0)) {
    claim(name);
    buffers_.push_back({name, Tensor<T>(std::move(shape), fill)});
    return buffers_.size() - 1;
  }

  std::size_t size() const noexcept { return params_.size(); }
  T* at_value(std::size_t i) noexcept { return params_[i].value.data(); }
  T* at_grad(std::size_t i) noexcept { return params_[i].grad.data(); }
  Param<T>& operator[](std::size_t i) { return params_[i]; }
  const Param<T>& operator[](std::size_t i) const { return params_[i]; }
  std::vector<Param<T>>& params() noexcept { return params_; }
  const std::vector<Param<T>>& params() const noexcept { return params_; }

  struct Buffer {
    std::string name;
    Tensor<T> value;
  };
  Buffer& buffer(std::size_t i) { return buffers_[i]; }
  const Buffer& buffer(std::size_t i) const { return buffers_[i]; }
  std::vector<Buffer>& buffers() noexcept { return buffers_; }
  const std::vector<Buffer>& buffers() const noexcept { return buffers_; }

  Param<T>& find(const std::string& name) {
    for (auto& p : params_)
      if (p.name == name) return p;
    throw ShapeError("no parameter named " + name);
  }

  void zero_grad() {
    for (auto& p : params_) p.grad.fill(T(0));
  }

  // Sum of trainable element counts.
  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& p : params_)
      for (T v : p.value.values()) s += static_cast<double>(v) * v;
    return s;
  }

  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& p : params_) {
      auto i = out.add(p.name, p.value.shape());
      out[i].value = p.value.template cast<U>();
    }
    for (const auto& b : buffers_) {
      auto i = out.add_buffer(b.name, b.value.shape());
      out.buffer(i).value = b.value.template cast<U>();
    }
    return out;
  }

 private:
  void claim(const std::string& name) {
    if (!names_.emplace(name, 0).second) throw ShapeError("duplicate parameter name " + name);
  }

  std::vector<Param<T>> params_;
  std::vector<Buffer> buffers_;
  std::map<std::string, int> names_;
};

template <class T>
std::size_t count_params(const ParamStore<T>& store) {
  return store.count();
}

// He-normal: N(0, 2 / fan_in).
template <class T, class Rng>
void he_normal(Tensor<T>& w, std::size_t fan_in, Rng& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (auto& v : w.values()) v = static_cast<T>(g(rng));
}

}  // namespace auscult::nn

#endif  // AUSCULT_NN_PARAM_STORE_HPP_
