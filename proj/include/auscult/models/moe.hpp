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

#ifndef AUSCULT_MODELS_MOE_HPP_
#define AUSCULT_MODELS_MOE_HPP_

#include <string>

#include "auscult/nn/layers.hpp"

namespace auscult::models {

using nn::ConstMatMap;
using nn::Context;
using nn::MatMap;
using nn::ParamStore;
using nn::RowMat;
using nn::Shape;
using nn::Tensor;

// Expert and gate weights for K experts over a D-dim embedding and C classes.
// expert_w is D x (K*C) with expert k occupying columns [k*C, (k+1)*C).
template <class T>
struct MoeWeights {
  const T* expert_w;
  const T* expert_b;
  const T* gate_w;  // D x K
  const T* gate_b;
  std::size_t dim, experts, classes;
};

// Pre-activations a = emb*W_e + b_e (N x K*C), gate probabilities g
// (N x K) and mixed logits z = sum_k g_k * relu(a_k) (N x C).
template <class T>
struct MoeState {
  Tensor<T> pre;
  Tensor<T> gate;
  Tensor<T> logits;
};

template <class T>
MoeState<T> moe_logits(const Tensor<T>& emb, const MoeWeights<T>& w) {
  nn::require_rank(emb.shape(), 2, "moe");
  if (emb.dim(1) != w.dim)
    throw ShapeError("moe: embedding length " + std::to_string(emb.dim(1)) + ", expected " +
                     std::to_string(w.dim));
  const std::size_t n = emb.dim(0), kc = w.experts * w.classes;
  MoeState<T> s{Tensor<T>({n, kc}), Tensor<T>({n, w.experts}), Tensor<T>({n, w.classes})};
  ConstMatMap<T> e(emb.data(), n, w.dim);
  MatMap<T> pre(s.pre.data(), n, kc);
  pre.noalias() = e * ConstMatMap<T>(w.expert_w, w.dim, kc);
  pre.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(w.expert_b, kc);
  Tensor<T> gz({n, w.experts});
  MatMap<T> gm(gz.data(), n, w.experts);
  gm.noalias() = e * ConstMatMap<T>(w.gate_w, w.dim, w.experts);
  gm.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(w.gate_b, w.experts);
  s.gate = nn::softmax(gz);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < w.experts; ++k)
      for (std::size_t c = 0; c < w.classes; ++c) {
        const T a = s.pre(i, k * w.classes + c);
        if (a > T(0)) s.logits(i, c) += s.gate(i, k) * a;
      }
  return s;
}

// y = softmax(sum_k g_k e_k), e_k = relu(W_k emb + b_k), g = softmax(W_g emb + b_g).
template <class T>
Tensor<T> moe_forward(const Tensor<T>& emb, const MoeWeights<T>& w) {
  return nn::softmax(moe_logits(emb, w).logits);
}

// Mixture-of-experts head producing logits; the caller applies softmax.
template <class T>
class MixtureOfExperts final : public nn::Layer<T> {
 public:
  template <class Rng>
  MixtureOfExperts(ParamStore<T>& store, const std::string& name, std::size_t dim,
                   std::size_t experts, std::size_t classes, Rng& rng)
      : store_(&store), dim_(dim), k_(experts), c_(classes) {
    if (experts == 0) throw UsageError("mixture of experts needs at least one expert");
    ew_ = store.add(name + "/experts/kernel", {dim, experts * classes});
    eb_ = store.add(name + "/experts/bias", {experts * classes});
    gw_ = store.add(name + "/gate/kernel", {dim, experts});
    gb_ = store.add(name + "/gate/bias", {experts});
    nn::he_normal(store[ew_].value, dim, rng);
    nn::he_normal(store[gw_].value, dim, rng);
  }

  MoeWeights<T> weights() const {
    return {store_->at_value(ew_), store_->at_value(eb_), store_->at_value(gw_),
            store_->at_value(gb_), dim_, k_, c_};
  }

  Tensor<T> forward(const Tensor<T>& x, const Context&) override {
    emb_ = x;
    state_ = moe_logits(x, weights());
    return state_.logits;
  }

  Tensor<T> backward(const Tensor<T>& dz) override {
    const std::size_t n = emb_.dim(0), kc = k_ * c_;
    if (dz.shape() != Shape{n, c_}) throw ShapeError("moe backward: bad gradient shape");
    Tensor<T> da({n, kc}), dg({n, k_});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < k_; ++k) {
        double dot = 0.0;
        for (std::size_t c = 0; c < c_; ++c) {
          const T a = state_.pre(i, k * c_ + c);
          if (a > T(0)) {
            dot += static_cast<double>(a) * dz(i, c);
            da(i, k * c_ + c) = state_.gate(i, k) * dz(i, c);
          }
        }
        dg(i, k) = static_cast<T>(dot);
      }
    const Tensor<T> ds = nn::softmax_backward(state_.gate, dg);

    ConstMatMap<T> e(emb_.data(), n, dim_);
    ConstMatMap<T> dam(da.data(), n, kc);
    ConstMatMap<T> dsm(ds.data(), n, k_);
    MatMap<T>(store_->at_grad(ew_), dim_, kc).noalias() += e.transpose() * dam;
    nn::RowVecMap<T>(store_->at_grad(eb_), kc) += dam.colwise().sum();
    MatMap<T>(store_->at_grad(gw_), dim_, k_).noalias() += e.transpose() * dsm;
    nn::RowVecMap<T>(store_->at_grad(gb_), k_) += dsm.colwise().sum();

    Tensor<T> dx({n, dim_});
    MatMap<T> dxm(dx.data(), n, dim_);
    dxm.noalias() = dam * ConstMatMap<T>(store_->at_value(ew_), dim_, kc).transpose();
    dxm.noalias() += dsm * ConstMatMap<T>(store_->at_value(gw_), dim_, k_).transpose();
    return dx;
  }

  Shape output_shape(const Shape& in) const override {
    nn::require_rank(in, 2, "moe");
    if (in[1] != dim_) throw ShapeError("moe: bad embedding length");
    return {in[0], c_};
  }
  std::string kind() const override { return "MoE"; }

  // Gate probabilities from the most recent forward pass.
  const Tensor<T>& last_gate() const noexcept { return state_.gate; }
  std::size_t experts() const noexcept { return k_; }

 private:
  ParamStore<T>* store_;
  std::size_t dim_, k_, c_;
  std::size_t ew_ = 0, eb_ = 0, gw_ = 0, gb_ = 0;
  Tensor<T> emb_;
  MoeState<T> state_;
};

}  // namespace auscult::models

#endif  // AUSCULT_MODELS_MOE_HPP_
