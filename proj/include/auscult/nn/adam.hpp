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

#ifndef AUSCULT_NN_ADAM_HPP_
#define AUSCULT_NN_ADAM_HPP_

#include <cmath>
#include <cstdint>

#include "auscult/error.hpp"
#include "auscult/nn/param_store.hpp"

namespace auscult::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // One bias-corrected update from the gradients currently in the store.
  // All gradients are checked before any parameter moves.
  template <class T>
  void step(ParamStore<T>& store) {
    for (const auto& p : store.params())
      for (std::size_t i = 0; i < p.grad.size(); ++i)
        if (!std::isfinite(p.grad[i]))
          throw TrainingError("non-finite gradient in parameter " + p.name + " at element " +
                              std::to_string(i));
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& p : store.params())
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        const double m = cfg_.beta1 * p.m[i] + (1.0 - cfg_.beta1) * g;
        const double v = cfg_.beta2 * p.v[i] + (1.0 - cfg_.beta2) * g * g;
        p.m[i] = static_cast<T>(m);
        p.v[i] = static_cast<T>(v);
        p.value[i] -= static_cast<T>(cfg_.lr * (m / c1) / (std::sqrt(v / c2) + cfg_.epsilon));
      }
  }

  std::uint64_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }
  void set_lr(double lr) noexcept { cfg_.lr = lr; }

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
};

}  // namespace auscult::nn

#endif  // AUSCULT_NN_ADAM_HPP_
