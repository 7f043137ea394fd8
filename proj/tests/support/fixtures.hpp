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

#ifndef AUSCULT_TESTS_FIXTURES_HPP_
#define AUSCULT_TESTS_FIXTURES_HPP_

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "auscult/audio.hpp"
#include "auscult/icbhi_data.hpp"

namespace auscult::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() /
            ("auscult_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

inline AudioClip sine(double hz, double seconds, int rate, double amplitude = 0.5,
                      double phase = 0.0) {
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(static_cast<std::size_t>(std::llround(seconds * rate)));
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    clip.samples[i] = static_cast<float>(
        amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate + phase));
  return clip;
}

inline AudioClip noise(double seconds, int rate, std::uint64_t seed, double amplitude = 0.1) {
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(static_cast<std::size_t>(std::llround(seconds * rate)));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, amplitude);
  for (float& s : clip.samples) s = static_cast<float>(n(rng));
  return clip;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

struct FixtureRecording {
  std::string id;                       // e.g. "101_1b1_Al_sc_Meditron"
  double seconds = 3.0;
  int rate = 4000;
  std::vector<CycleAnnotation> cycles;  // written verbatim to <id>.txt
  double tone_hz = 300.0;
};

// Writes <id>.wav + <id>.txt per recording and a diagnosis table.
inline void write_corpus(const std::filesystem::path& root,
                         const std::vector<FixtureRecording>& recordings,
                         const std::vector<std::pair<std::string, std::string>>& diagnoses) {
  std::filesystem::create_directories(root);
  std::uint64_t seed = 1;
  for (const auto& r : recordings) {
    auto clip = sine(r.tone_hz, r.seconds, r.rate, 0.3);
    auto hiss = noise(r.seconds, r.rate, seed++, 0.05);
    for (std::size_t i = 0; i < clip.samples.size(); ++i) clip.samples[i] += hiss.samples[i];
    write_wav(root / (r.id + ".wav"), clip);
    write_text(root / (r.id + ".txt"), format_annotation(r.cycles));
  }
  std::string table;
  for (const auto& [patient, diag] : diagnoses) table += patient + "\t" + diag + "\n";
  write_text(root / "patient_diagnosis.txt", table);
}

}  // namespace auscult::testing

#endif  // AUSCULT_TESTS_FIXTURES_HPP_
