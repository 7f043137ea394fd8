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

#ifndef AUSCULT_ERROR_HPP_
#define AUSCULT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace auscult {

// Base for every error raised by the library. The CLI maps the derived kinds
// onto process exit codes (usage 1, data 2, training 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing input data: audio, annotations, split lists, caches.
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical failure during optimization (non-finite loss or gradient).
class TrainingError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Metric whose denominator is empty, e.g. sensitivity with no positives.
class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace auscult

#endif  // AUSCULT_ERROR_HPP_
