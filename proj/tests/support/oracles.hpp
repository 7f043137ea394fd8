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

#ifndef AUSCULT_TESTS_ORACLES_HPP_
#define AUSCULT_TESTS_ORACLES_HPP_

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

// Reference computations used only by tests. Nothing here shares code with
// the library paths it checks.
namespace auscult::oracle {

// |X(f)| of a real signal by direct summation at an arbitrary frequency.
inline double dft_magnitude(std::span<const float> x, double hz, double rate) {
  std::complex<double> acc = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n)
    acc += static_cast<double>(x[n]) *
           std::polar(1.0, -2.0 * std::numbers::pi * hz * static_cast<double>(n) / rate);
  return std::abs(acc);
}

// Power of bin k of an N-point DFT of x (zero-padded to N).
inline double dft_bin_power(std::span<const double> x, std::size_t k, std::size_t n) {
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * i % n) /
                                      static_cast<double>(n));
  return std::norm(acc);
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

}  // namespace auscult::oracle

#endif  // AUSCULT_TESTS_ORACLES_HPP_
