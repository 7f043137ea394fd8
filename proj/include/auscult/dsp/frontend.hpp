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

#ifndef AUSCULT_DSP_FRONTEND_HPP_
#define AUSCULT_DSP_FRONTEND_HPP_

#include "auscult/audio.hpp"
#include "auscult/dsp/cqt.hpp"
#include "auscult/dsp/gammatone.hpp"
#include "auscult/dsp/mel.hpp"
#include "auscult/dsp/resample.hpp"
#include "auscult/dsp/spectrogram.hpp"
#include "auscult/dsp/stft.hpp"

namespace auscult::dsp {

struct FrontendConfig {
  FrontEnd kind = FrontEnd::LogMel;
  MelConfig mel;
  GammatoneConfig gammatone;
  MfccConfig mfcc;
  CqtConfig cqt;
  bool z_normalize = false;
};

// 16 kHz clip -> 64-row spectrogram of the configured type.
inline Spectrogram compute_spectrogram(const AudioClip& clip, const FrontendConfig& cfg) {
  Spectrogram s;
  switch (cfg.kind) {
    case FrontEnd::LogMel: s = log_mel(clip, cfg.mel); break;
    case FrontEnd::Gamma: s = gammatone_spec(clip, cfg.gammatone); break;
    case FrontEnd::MFCC: s = mfcc_stack(clip, cfg.mfcc); break;
    case FrontEnd::CQT: s = cqt_spec(clip, cfg.cqt); break;
  }
  if (cfg.z_normalize) z_normalize(s);
  return s;
}

}  // namespace auscult::dsp

#endif  // AUSCULT_DSP_FRONTEND_HPP_
