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

#ifndef AUSCULT_NN_LOSSES_HPP_
#define AUSCULT_NN_LOSSES_HPP_

#include <algorithm>
#include <cmath>

#include "auscult/nn/param_store.hpp"
#include "auscult/nn/tensor.hpp"

namespace auscult::nn {

inline constexpr double kL2Lambda = 1e-4;
inline constexpr double kProbClamp = 1e-12;

struct LossValue {
  double total = 0.0;
  double data_term = 0.0;
  double l2_term = 0.0;
  double lambda = kL2Lambda;
  bool clamped = false;  // a log argument hit the 1e-12 floor
};

// How the KL data term combines batch rows. Sum is the literal form; Mean
// divides by the batch size like the cross-entropy term.
enum class Reduction { Sum, Mean };

template <class T>
double l2_term(const ParamStore<T>* theta, double lambda) {
  return theta ? 0.5 * lambda * theta->squared_norm() : 0.0;
}

// grad += lambda * theta for every trainable parameter.
template <class T>
void add_l2_grad(ParamStore<T>& theta, double lambda) {
  for (auto& p : theta.params())
    for (std::size_t i = 0; i < p.value.size(); ++i)
      p.grad[i] += static_cast<T>(lambda * p.value[i]);
}

namespace detail {
template <class T>
void check_pair(const Tensor<T>& yhat, const Tensor<T>& y, const char* what) {
  if (yhat.rank() != 2) throw ShapeError(std::string(what) + ": predictions must be rank 2");
  yhat.require_same(y, what);
  if (yhat.dim(0) == 0) throw ShapeError(std::string(what) + ": empty batch");
}
}  // namespace detail

// -(1/N) sum_n y_n . log yhat_n + (lambda/2) ||theta||^2
template <class T>
LossValue cross_entropy_l2_loss(const Tensor<T>& yhat, const Tensor<T>& y,
                                const ParamStore<T>* theta = nullptr, double lambda = kL2Lambda) {
  detail::check_pair(yhat, y, "cross_entropy");
  LossValue out;
  out.lambda = lambda;
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == T(0)) continue;
    double p = yhat[i];
    if (p < kProbClamp) {
      p = kProbClamp;
      out.clamped = true;
    }
    acc -= static_cast<double>(y[i]) * std::log(p);
  }
  out.data_term = acc / static_cast<double>(y.dim(0));
  out.l2_term = l2_term(theta, lambda);
  out.total = out.data_term + out.l2_term;
  return out;
}

// sum_n y_n . log(y_n / yhat_n) + (lambda/2) ||theta||^2, with 0 log 0 = 0.
template <class T>
LossValue kl_div_l2_loss(const Tensor<T>& yhat, const Tensor<T>& y,
                         const ParamStore<T>* theta = nullptr, double lambda = kL2Lambda,
                         Reduction reduction = Reduction::Sum) {
  detail::check_pair(yhat, y, "kl_div");
  LossValue out;
  out.lambda = lambda;
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = y[i];
    if (t == 0.0) continue;
    double p = yhat[i];
    if (p < kProbClamp) {
      p = kProbClamp;
      out.clamped = true;
    }
    acc += t * std::log(t / p);
  }
  if (reduction == Reduction::Mean) acc /= static_cast<double>(y.dim(0));
  out.data_term = acc;
  out.l2_term = l2_term(theta, lambda);
  out.total = out.data_term + out.l2_term;
  return out;
}

// d(data term)/d(yhat) for either loss: -scale * y / yhat, where scale is
// 1/N for cross-entropy and mean-KL, 1 for summed KL.
template <class T>
Tensor<T> prob_loss_grad(const Tensor<T>& yhat, const Tensor<T>& y, double scale) {
  detail::check_pair(yhat, y, "loss gradient");
  Tensor<T> g(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] != T(0))
      g[i] = static_cast<T>(-scale * y[i] / std::max<double>(yhat[i], kProbClamp));
  return g;
}

// Same gradient taken through the final softmax, with respect to the logits:
// scale * (yhat * sum_k y_k - y). The logs of yhat cancel so no clamp applies.
template <class T>
Tensor<T> softmax_loss_grad(const Tensor<T>& yhat, const Tensor<T>& y, double scale) {
  detail::check_pair(yhat, y, "loss gradient");
  Tensor<T> g(y.shape());
  const std::size_t n = y.dim(0), c = y.dim(1);
  for (std::size_t i = 0; i < n; ++i) {
    double mass = 0.0;
    for (std::size_t k = 0; k < c; ++k) mass += y(i, k);
    for (std::size_t k = 0; k < c; ++k)
      g(i, k) = static_cast<T>(scale * (yhat(i, k) * mass - y(i, k)));
  }
  return g;
}

inline double loss_scale(std::size_t batch, bool kl, Reduction reduction = Reduction::Sum) {
  return kl && reduction == Reduction::Sum ? 1.0 : 1.0 / static_cast<double>(batch);
}

// Batch mean of ||a_n - b_n||_2.
template <class T>
double euclidean_embedding_loss(const Tensor<T>& a, const Tensor<T>& b) {
  a.require_same(b, "euclidean_embedding_loss");
  if (a.rank() != 2 || a.dim(0) == 0) throw ShapeError("embeddings must be a non-empty batch");
  const std::size_t n = a.dim(0), d = a.dim(1);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = static_cast<double>(a(i, k)) - b(i, k);
      s += diff * diff;
    }
    acc += std::sqrt(s);
  }
  return acc / static_cast<double>(n);
}

// Gradient of euclidean_embedding_loss with respect to b. Rows at zero
// distance get the zero subgradient.
template <class T>
Tensor<T> euclidean_embedding_grad(const Tensor<T>& a, const Tensor<T>& b) {
  a.require_same(b, "euclidean_embedding_grad");
  const std::size_t n = a.dim(0), d = a.dim(1);
  Tensor<T> g(b.shape());
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = static_cast<double>(b(i, k)) - a(i, k);
      s += diff * diff;
    }
    const double norm = std::sqrt(s);
    if (norm == 0.0) continue;
    for (std::size_t k = 0; k < d; ++k)
      g(i, k) = static_cast<T>((static_cast<double>(b(i, k)) - a(i, k)) / (norm * n));
  }
  return g;
}

}  // namespace auscult::nn

#endif  // AUSCULT_NN_LOSSES_HPP_
