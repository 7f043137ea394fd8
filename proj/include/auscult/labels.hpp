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

#ifndef AUSCULT_LABELS_HPP_
#define AUSCULT_LABELS_HPP_

#include <array>
#include <cstddef>
#include <string_view>

namespace auscult {

// Class order follows the anomaly confusion-matrix layout: Crackle, Wheeze,
// Both, Normal. The integer value is the network output index.
enum class CycleLabel4 : int { Crackle = 0, Wheeze = 1, Both = 2, Normal = 3 };

// Chronic, NonChronic, Healthy, matching the disease confusion-matrix layout.
enum class DiseaseGroup3 : int { Chronic = 0, NonChronic = 1, Healthy = 2 };

inline constexpr std::size_t kNumCycleClasses = 4;
inline constexpr std::size_t kNumDiseaseClasses = 3;

constexpr CycleLabel4 label_cycle(bool has_crackle, bool has_wheeze) noexcept {
  if (has_crackle && has_wheeze) return CycleLabel4::Both;
  if (has_crackle) return CycleLabel4::Crackle;
  if (has_wheeze) return CycleLabel4::Wheeze;
  return CycleLabel4::Normal;
}

// Inverse of label_cycle: (has_crackle, has_wheeze).
constexpr std::array<bool, 2> cycle_flags(CycleLabel4 label) noexcept {
  switch (label) {
    case CycleLabel4::Crackle: return {true, false};
    case CycleLabel4::Wheeze: return {false, true};
    case CycleLabel4::Both: return {true, true};
    case CycleLabel4::Normal: break;
  }
  return {false, false};
}

constexpr std::string_view to_string(CycleLabel4 label) noexcept {
  constexpr std::array<std::string_view, 4> names{"Crackle", "Wheeze", "Both",
                                                  "Normal"};
  return names[static_cast<std::size_t>(label)];
}

constexpr std::string_view to_string(DiseaseGroup3 group) noexcept {
  constexpr std::array<std::string_view, 3> names{"Chronic", "NonChronic",
                                                  "Healthy"};
  return names[static_cast<std::size_t>(group)];
}

}  // namespace auscult

#endif  // AUSCULT_LABELS_HPP_
