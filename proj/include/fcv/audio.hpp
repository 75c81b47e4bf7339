// Copyright (c) 2026 The fcv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FCV_AUDIO_HPP_
#define FCV_AUDIO_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fcv/errors.hpp"

namespace fcv {

// Decoded mono waveform. Samples are finite and within [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;
  std::string source_id;

  double seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

enum class CaseId { kCase4k, kCase8k, kCase48k };
enum class Stage2Tap { kConvBlock6Gem, kEmbeddingLayer };

const char* to_string(CaseId id);
const char* to_string(Stage2Tap tap);
CaseId case_id_from_string(const std::string& s);
Stage2Tap tap_from_string(const std::string& s);

// Per-sampling-rate processing record. One fixed row per case; see
// case_table() for the three rows.
struct CaseConfig {
  CaseId id;
  int anchor_rate;       // the rate this case is anchored to
  int stage1_rate;
  int stage1_mel_bins;
  int stage2_rate;
  int stage2_mel_bins;
  Stage2Tap stage2_tap;
  bool stage2_wavegram;
};

const std::array<CaseConfig, 3>& case_table();
const CaseConfig& case_config(CaseId id);

// Picks the case whose anchor rate is nearest to sample_rate; exact ties go
// to the higher anchor. Total over all positive rates.
const CaseConfig& route(int sample_rate);

// Fixed-width routing table as printed by the `routes` CLI subcommand.
std::string routes_table_text();

// RIFF/WAVE decode. Accepts PCM 16-bit and IEEE float 32-bit payloads with
// 1 or 2 channels; stereo is downmixed with a per-sample channel mean and
// integer PCM is scaled by 1/32768. Non-finite float samples become 0 and
// everything is clamped to [-1, 1].
AudioClip decode_wav(std::span<const uint8_t> bytes, std::string source_id = "");

std::vector<uint8_t> encode_wav_pcm16(const AudioClip& clip);
std::vector<uint8_t> encode_wav_float32(const AudioClip& clip);

// Rational-ratio polyphase resampler (windowed sinc, Kaiser window, 64 taps
// per phase). Identity when rates already match.
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace fcv

#endif  // FCV_AUDIO_HPP_
