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

#ifndef AUSCULT_NN_TENSOR_HPP_
#define AUSCULT_NN_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <new>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "auscult/error.hpp"

namespace auscult::nn {

using Shape = std::vector<std::size_t>;

// Vectorised reductions peel a different number of leading elements
// depending on buffer alignment, which changes float summation order.
// Aligning every tensor to 64 bytes keeps results bit-reproducible.
inline constexpr std::size_t kTensorAlignment = 64;

template <class T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kTensorAlignment}));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t{kTensorAlignment});
  }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ')';
  return os.str();
}

// Dense row-major array of rank <= 4. Feature maps are laid out NHWC with
// H the frequency axis and W the time axis.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)) {
    if (shape_.size() > 4) throw ShapeError("tensor rank above 4");
    data_.assign(shape_size(shape_), fill);
  }
  Tensor(Shape shape, const std::vector<T>& data)
      : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    if (shape_.size() > 4) throw ShapeError("tensor rank above 4");
    if (shape_size(shape_) != data_.size())
      throw ShapeError("tensor data length does not match shape " + shape_string(shape_));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  AlignedVector<T>& values() noexcept { return data_; }
  const AlignedVector<T>& values() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  // Rank-2 (row, col) and rank-4 (n, h, w, c) accessors.
  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * shape_[1] + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * shape_[1] + c];
  }
  T& operator()(std::size_t n, std::size_t h, std::size_t w, std::size_t c) noexcept {
    return data_[((n * shape_[1] + h) * shape_[2] + w) * shape_[3] + c];
  }
  const T& operator()(std::size_t n, std::size_t h, std::size_t w, std::size_t c) const noexcept {
    return data_[((n * shape_[1] + h) * shape_[2] + w) * shape_[3] + c];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  Tensor reshaped(Shape s) const {
    if (shape_size(s) != data_.size()) throw ShapeError("reshape changes element count");
    Tensor t = *this;
    t.shape_ = std::move(s);
    return t;
  }

  template <class U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  Tensor& operator+=(const Tensor& o) {
    require_same(o, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  void require_same(const Tensor& o, const char* what) const {
    if (shape_ != o.shape_)
      throw ShapeError(std::string(what) + ": shapes " + shape_string(shape_) + " and " +
                       shape_string(o.shape_) + " differ");
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  AlignedVector<T> data_;
};

// Row n of a rank-2 tensor, or sample n of a batch, copied out.
template <class T>
Tensor<T> take_rows(const Tensor<T>& x, const std::vector<std::size_t>& rows) {
  Shape s = x.shape();
  const std::size_t stride = x.size() / s.at(0);
  s[0] = rows.size();
  Tensor<T> out(s);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(x.data() + rows[i] * stride, stride, out.data() + i * stride);
  return out;
}

template <class T>
void require_finite(const Tensor<T>& t, const std::string& where) {
  if (!t.all_finite()) throw TrainingError("non-finite values in " + where);
}

}  // namespace auscult::nn

#endif  // AUSCULT_NN_TENSOR_HPP_
