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

#ifndef AUSCULT_NN_LAYERS_HPP_
#define AUSCULT_NN_LAYERS_HPP_

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "auscult/nn/param_store.hpp"
#include "auscult/nn/tensor.hpp"

namespace auscult::nn {

struct Context {
  bool train = false;
  std::mt19937_64* rng = nullptr;  // required by dropout in train mode
};

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <class T>
using RowVecMap = Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>;

// A layer caches what its backward pass needs during forward. backward()
// adds parameter gradients into the store and returns d(loss)/d(input).
template <class T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, const Context& ctx) = 0;
  virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual std::string kind() const = 0;
};

inline void require_rank(const Shape& s, std::size_t rank, const char* layer) {
  if (s.size() != rank)
    throw ShapeError(std::string(layer) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(s));
}

// ------------------------------------------------------------------- Conv2d

// k x k convolution, stride 1, zero "same" padding. Weight layout is
// (k, k, in, out), i.e. an im2col-ready (k*k*in) x out matrix.
template <class T>
class Conv2d final : public Layer<T> {
 public:
  template <class Rng>
  Conv2d(ParamStore<T>& store, const std::string& name, std::size_t in, std::size_t out,
         Rng& rng, std::size_t k = 3)
      : store_(&store), in_(in), out_(out), k_(k) {
    if (k % 2 == 0) throw ShapeError("conv kernel size must be odd");
    w_ = store.add(name + "/kernel", {k, k, in, out});
    b_ = store.add(name + "/bias", {out});
    he_normal(store[w_].value, k * k * in, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, const Context&) override {
    check_input(x.shape());
    x_ = x;
    const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor<T> y({n, h, w, out_});
    ConstMatMap<T> wm(store_->at_value(w_), k_ * k_ * in_, out_);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias(store_->at_value(b_), out_);
    RowMat<T> cols(h * w, k_ * k_ * in_);
    for (std::size_t s = 0; s < n; ++s) {
      im2col(x.data() + s * h * w * in_, h, w, cols);
      MatMap<T> ys(y.data() + s * h * w * out_, h * w, out_);
      ys.noalias() = cols * wm;
      ys.rowwise() += bias;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const std::size_t n = x_.dim(0), h = x_.dim(1), w = x_.dim(2);
    if (dy.shape() != Shape{n, h, w, out_}) throw ShapeError("conv backward: bad gradient shape");
    Tensor<T> dx(x_.shape());
    ConstMatMap<T> wm(store_->at_value(w_), k_ * k_ * in_, out_);
    MatMap<T> dw(store_->at_grad(w_), k_ * k_ * in_, out_);
    RowVecMap<T> db(store_->at_grad(b_), out_);
    RowMat<T> cols(h * w, k_ * k_ * in_), dcols(h * w, k_ * k_ * in_);
    for (std::size_t s = 0; s < n; ++s) {
      ConstMatMap<T> dys(dy.data() + s * h * w * out_, h * w, out_);
      im2col(x_.data() + s * h * w * in_, h, w, cols);
      dw.noalias() += cols.transpose() * dys;
      db += dys.colwise().sum();
      dcols.noalias() = dys * wm.transpose();
      col2im(dcols, h, w, dx.data() + s * h * w * in_);
    }
    return dx;
  }

  Shape output_shape(const Shape& in) const override {
    check_input(in);
    return {in[0], in[1], in[2], out_};
  }
  std::string kind() const override { return "Cv"; }

 private:
  void check_input(const Shape& s) const {
    require_rank(s, 4, "conv2d");
    if (s[3] != in_)
      throw ShapeError("conv2d: expected " + std::to_string(in_) + " input channels, got " +
                       std::to_string(s[3]));
  }

  void im2col(const T* x, std::size_t h, std::size_t w, RowMat<T>& cols) const {
    const auto r = static_cast<std::ptrdiff_t>(k_ / 2);
    cols.setZero();
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        T* row = cols.data() + (i * w + j) * k_ * k_ * in_;
        for (std::size_t a = 0; a < k_; ++a) {
          const auto si = static_cast<std::ptrdiff_t>(i + a) - r;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t b = 0; b < k_; ++b) {
            const auto sj = static_cast<std::ptrdiff_t>(j + b) - r;
            if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(w)) continue;
            const T* src = x + (static_cast<std::size_t>(si) * w + static_cast<std::size_t>(sj)) * in_;
            std::copy_n(src, in_, row + (a * k_ + b) * in_);
          }
        }
      }
  }

  void col2im(const RowMat<T>& dcols, std::size_t h, std::size_t w, T* dx) const {
    const auto r = static_cast<std::ptrdiff_t>(k_ / 2);
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const T* row = dcols.data() + (i * w + j) * k_ * k_ * in_;
        for (std::size_t a = 0; a < k_; ++a) {
          const auto si = static_cast<std::ptrdiff_t>(i + a) - r;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t b = 0; b < k_; ++b) {
            const auto sj = static_cast<std::ptrdiff_t>(j + b) - r;
            if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(w)) continue;
            T* dst = dx + (static_cast<std::size_t>(si) * w + static_cast<std::size_t>(sj)) * in_;
            const T* src = row + (a * k_ + b) * in_;
            for (std::size_t c = 0; c < in_; ++c) dst[c] += src[c];
          }
        }
      }
  }

  ParamStore<T>* store_;
  std::size_t in_, out_, k_;
  std::size_t w_ = 0, b_ = 0;
  Tensor<T> x_;
};

// ---------------------------------------------------------------- BatchNorm

// Per-channel normalisation over every axis except the last.
template <class T>
class BatchNorm final : public Layer<T> {
 public:
  static constexpr double kEpsilon = 1e-5;
  static constexpr double kMomentum = 0.99;

  BatchNorm(ParamStore<T>& store, const std::string& name, std::size_t channels)
      : store_(&store), c_(channels) {
    gamma_ = store.add(name + "/gamma", {channels});
    beta_ = store.add(name + "/beta", {channels});
    store[gamma_].value.fill(T(1));
    mean_ = store.add_buffer(name + "/moving_mean", {channels}, T(0));
    var_ = store.add_buffer(name + "/moving_variance", {channels}, T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, const Context& ctx) override {
    if (x.rank() < 2 || x.shape().back() != c_)
      throw ShapeError("batch_norm: expected " + std::to_string(c_) + " channels, got " +
                       shape_string(x.shape()));
    const std::size_t m = x.size() / c_;
    const T* gamma = store_->at_value(gamma_);
    const T* beta = store_->at_value(beta_);
    auto& run_mean = store_->buffer(mean_).value;
    auto& run_var = store_->buffer(var_).value;
    Tensor<T> y(x.shape());
    xhat_ = Tensor<T>(x.shape());
    train_ = ctx.train;
    if (!ctx.train) {
      inv_std_.assign(c_, 0.0);
      for (std::size_t c = 0; c < c_; ++c)
        inv_std_[c] = 1.0 / std::sqrt(static_cast<double>(run_var[c]) + kEpsilon);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < c_; ++c) {
          const double xh = (static_cast<double>(x[i * c_ + c]) - run_mean[c]) * inv_std_[c];
          xhat_[i * c_ + c] = static_cast<T>(xh);
          y[i * c_ + c] = static_cast<T>(gamma[c] * xh + beta[c]);
        }
      return y;
    }
    if (x.dim(0) < 2) throw ShapeError("batch_norm: train mode needs a batch of at least 2");
    std::vector<double> mean(c_, 0.0), var(c_, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < c_; ++c) mean[c] += x[i * c_ + c];
    for (auto& v : mean) v /= static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < c_; ++c) {
        const double d = x[i * c_ + c] - mean[c];
        var[c] += d * d;
      }
    inv_std_.assign(c_, 0.0);
    for (std::size_t c = 0; c < c_; ++c) {
      var[c] /= static_cast<double>(m);
      inv_std_[c] = 1.0 / std::sqrt(var[c] + kEpsilon);
      run_mean[c] = static_cast<T>(kMomentum * run_mean[c] + (1.0 - kMomentum) * mean[c]);
      run_var[c] = static_cast<T>(kMomentum * run_var[c] + (1.0 - kMomentum) * var[c]);
    }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < c_; ++c) {
        const double xh = (x[i * c_ + c] - mean[c]) * inv_std_[c];
        xhat_[i * c_ + c] = static_cast<T>(xh);
        y[i * c_ + c] = static_cast<T>(gamma[c] * xh + beta[c]);
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const T* gamma = store_->at_value(gamma_);
    T* dgamma = store_->at_grad(gamma_);
    T* dbeta = store_->at_grad(beta_);
    xhat_.require_same(dy, "batch_norm backward");
    Tensor<T> dx(dy.shape());
    const std::size_t m = dy.size() / c_;
    std::vector<double> sum_dy(c_, 0.0), sum_dy_xhat(c_, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < c_; ++c) {
        sum_dy[c] += dy[i * c_ + c];
        sum_dy_xhat[c] += static_cast<double>(dy[i * c_ + c]) * xhat_[i * c_ + c];
      }
    for (std::size_t c = 0; c < c_; ++c) {
      dgamma[c] += static_cast<T>(sum_dy_xhat[c]);
      dbeta[c] += static_cast<T>(sum_dy[c]);
    }
    if (!train_) {
      // Running statistics are constants here.
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < c_; ++c)
          dx[i * c_ + c] = static_cast<T>(dy[i * c_ + c] * gamma[c] * inv_std_[c]);
      return dx;
    }
    const double md = static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < c_; ++c) {
        const double g = gamma[c] * inv_std_[c] / md;
        dx[i * c_ + c] = static_cast<T>(
            g * (md * dy[i * c_ + c] - sum_dy[c] - xhat_[i * c_ + c] * sum_dy_xhat[c]));
      }
    return dx;
  }

  Shape output_shape(const Shape& in) const override { return in; }
  std::string kind() const override { return "Bn"; }

 private:
  ParamStore<T>* store_;
  std::size_t c_;
  std::size_t gamma_ = 0, beta_ = 0, mean_ = 0, var_ = 0;
  bool train_ = false;
  Tensor<T> xhat_;
  std::vector<double> inv_std_;
};

// ------------------------------------------------------------------ pooling

template <class T>
class AvgPool final : public Layer<T> {
 public:
  explicit AvgPool(std::size_t k) : k_(k) {
    if (k == 0) throw ShapeError("pool size must be positive");
  }

  Tensor<T> forward(const Tensor<T>& x, const Context&) override {
    in_ = x.shape();
    const Shape os = output_shape(in_);
    Tensor<T> y(os);
    const T scale = T(1) / static_cast<T>(k_ * k_);
    for (std::size_t n = 0; n < os[0]; ++n)
      for (std::size_t i = 0; i < os[1]; ++i)
        for (std::size_t j = 0; j < os[2]; ++j)
          for (std::size_t c = 0; c < os[3]; ++c) {
            T acc = 0;
            for (std::size_t a = 0; a < k_; ++a)
              for (std::size_t b = 0; b < k_; ++b) acc += x(n, i * k_ + a, j * k_ + b, c);
            y(n, i, j, c) = acc * scale;
          }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx(in_);
    const T scale = T(1) / static_cast<T>(k_ * k_);
    const Shape& os = dy.shape();
    for (std::size_t n = 0; n < os[0]; ++n)
      for (std::size_t i = 0; i < os[1]; ++i)
        for (std::size_t j = 0; j < os[2]; ++j)
          for (std::size_t c = 0; c < os[3]; ++c)
            for (std::size_t a = 0; a < k_; ++a)
              for (std::size_t b = 0; b < k_; ++b)
                dx(n, i * k_ + a, j * k_ + b, c) = dy(n, i, j, c) * scale;
    return dx;
  }

  Shape output_shape(const Shape& in) const override {
    require_rank(in, 4, "avg_pool");
    if (in[1] % k_ != 0 || in[2] % k_ != 0)
      throw ShapeError("avg_pool: " + shape_string(in) + " not divisible by " +
                       std::to_string(k_));
    return {in[0], in[1] / k_, in[2] / k_, in[3]};
  }
  std::string kind() const override { return "Ap"; }

 private:
  std::size_t k_;
  Shape in_;
};

template <class T>
class GlobalAvgPool final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, const Context&) override {
    in_ = x.shape();
    Tensor<T> y(output_shape(in_));
    const std::size_t hw = in_[1] * in_[2], c = in_[3];
    for (std::size_t n = 0; n < in_[0]; ++n) {
      for (std::size_t p = 0; p < hw; ++p)
        for (std::size_t k = 0; k < c; ++k) y(n, k) += x[(n * hw + p) * c + k];
      for (std::size_t k = 0; k < c; ++k) y(n, k) /= static_cast<T>(hw);
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx(in_);
    const std::size_t hw = in_[1] * in_[2], c = in_[3];
    for (std::size_t n = 0; n < in_[0]; ++n)
      for (std::size_t p = 0; p < hw; ++p)
        for (std::size_t k = 0; k < c; ++k)
          dx[(n * hw + p) * c + k] = dy(n, k) / static_cast<T>(hw);
    return dx;
  }

  Shape output_shape(const Shape& in) const override {
    require_rank(in, 4, "global_avg_pool");
    return {in[0], in[3]};
  }
  std::string kind() const override { return "Gap"; }

 private:
  Shape in_;
};

// --------------------------------------------------------- pointwise layers

template <class T>
class Relu final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, const Context&) override {
    Tensor<T> y = x;
    for (auto& v : y.values()) v = v > T(0) ? v : T(0);
    y_ = y;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (!(y_[i] > T(0))) dx[i] = T(0);
    return dx;
  }
  Shape output_shape(const Shape& in) const override { return in; }
  std::string kind() const override { return "Relu"; }

 private:
  Tensor<T> y_;
};

// Inverted dropout: survivors are scaled by 1 / (1 - rate) in train mode.
template <class T>
class Dropout final : public Layer<T> {
 public:
  explicit Dropout(double rate) : rate_(rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw UsageError("dropout rate must be in [0, 1)");
  }

  Tensor<T> forward(const Tensor<T>& x, const Context& ctx) override {
    active_ = ctx.train && rate_ > 0.0;
    if (!active_) return x;
    if (ctx.rng == nullptr) throw UsageError("dropout in train mode needs an rng");
    std::bernoulli_distribution keep(1.0 - rate_);
    const T scale = static_cast<T>(1.0 / (1.0 - rate_));
    mask_ = Tensor<T>(x.shape());
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask_[i] = keep(*ctx.rng) ? scale : T(0);
      y[i] = x[i] * mask_[i];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    if (!active_) return dy;
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask_[i];
    return dx;
  }

  Shape output_shape(const Shape& in) const override { return in; }
  std::string kind() const override { return "Dr"; }
  double rate() const noexcept { return rate_; }

 private:
  double rate_;
  bool active_ = false;
  Tensor<T> mask_;
};

// -------------------------------------------------------------------- Dense

template <class T>
class Dense final : public Layer<T> {
 public:
  template <class Rng>
  Dense(ParamStore<T>& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng)
      : store_(&store), in_(in), out_(out) {
    w_ = store.add(name + "/kernel", {in, out});
    b_ = store.add(name + "/bias", {out});
    he_normal(store[w_].value, in, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, const Context&) override {
    const Shape os = output_shape(x.shape());
    x_ = x;
    Tensor<T> y(os);
    ConstMatMap<T> xm(x.data(), os[0], in_);
    ConstMatMap<T> wm(store_->at_value(w_), in_, out_);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias(store_->at_value(b_), out_);
    MatMap<T> ym(y.data(), os[0], out_);
    ym.noalias() = xm * wm;
    ym.rowwise() += bias;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const std::size_t n = x_.dim(0);
    if (dy.shape() != Shape{n, out_}) throw ShapeError("dense backward: bad gradient shape");
    ConstMatMap<T> xm(x_.data(), n, in_);
    ConstMatMap<T> dym(dy.data(), n, out_);
    ConstMatMap<T> wm(store_->at_value(w_), in_, out_);
    MatMap<T>(store_->at_grad(w_), in_, out_).noalias() += xm.transpose() * dym;
    RowVecMap<T>(store_->at_grad(b_), out_) += dym.colwise().sum();
    Tensor<T> dx({n, in_});
    MatMap<T>(dx.data(), n, in_).noalias() = dym * wm.transpose();
    return dx;
  }

  Shape output_shape(const Shape& in) const override {
    require_rank(in, 2, "dense");
    if (in[1] != in_)
      throw ShapeError("dense: expected " + std::to_string(in_) + " inputs, got " +
                       std::to_string(in[1]));
    return {in[0], out_};
  }
  std::string kind() const override { return "Dense"; }

 private:
  ParamStore<T>* store_;
  std::size_t in_, out_;
  std::size_t w_ = 0, b_ = 0;
  Tensor<T> x_;
};

// ------------------------------------------------------------------ softmax

// Row-wise softmax of a rank-2 tensor, max-shifted for stability.
template <class T>
Tensor<T> softmax(const Tensor<T>& z) {
  require_rank(z.shape(), 2, "softmax");
  Tensor<T> y(z.shape());
  const std::size_t n = z.dim(0), c = z.dim(1);
  for (std::size_t i = 0; i < n; ++i) {
    T mx = z(i, 0);
    for (std::size_t k = 1; k < c; ++k) mx = std::max(mx, z(i, k));
    double sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) sum += std::exp(static_cast<double>(z(i, k) - mx));
    for (std::size_t k = 0; k < c; ++k)
      y(i, k) = static_cast<T>(std::exp(static_cast<double>(z(i, k) - mx)) / sum);
  }
  return y;
}

// dz = y * (dy - <y, dy>) per row.
template <class T>
Tensor<T> softmax_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  y.require_same(dy, "softmax backward");
  Tensor<T> dz(y.shape());
  const std::size_t n = y.dim(0), c = y.dim(1);
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    for (std::size_t k = 0; k < c; ++k) dot += static_cast<double>(y(i, k)) * dy(i, k);
    for (std::size_t k = 0; k < c; ++k) dz(i, k) = static_cast<T>(y(i, k) * (dy(i, k) - dot));
  }
  return dz;
}

template <class T>
class Softmax final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, const Context&) override {
    y_ = softmax(x);
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& dy) override { return softmax_backward(y_, dy); }
  Shape output_shape(const Shape& in) const override { return in; }
  std::string kind() const override { return "Softmax"; }

 private:
  Tensor<T> y_;
};

// --------------------------------------------------------------- Sequential

template <class T>
class Sequential {
 public:
  template <class L, class... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor<T> forward(const Tensor<T>& x, const Context& ctx) {
    Tensor<T> h = x;
    for (auto& l : layers_) {
      h = l->forward(h, ctx);
      require_finite(h, l->kind() + " forward");
    }
    return h;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
      g = (*it)->backward(g);
      require_finite(g, (*it)->kind() + " backward");
    }
    return g;
  }

  // Output shape after each layer.
  std::vector<std::pair<std::string, Shape>> trace(Shape in) const {
    std::vector<std::pair<std::string, Shape>> out;
    for (const auto& l : layers_) {
      in = l->output_shape(in);
      out.emplace_back(l->kind(), in);
    }
    return out;
  }

  Shape output_shape(Shape in) const {
    for (const auto& l : layers_) in = l->output_shape(in);
    return in;
  }

  std::size_t size() const noexcept { return layers_.size(); }
  Layer<T>& operator[](std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace auscult::nn

#endif  // AUSCULT_NN_LAYERS_HPP_
