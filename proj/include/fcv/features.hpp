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

#ifndef FCV_FEATURES_HPP_
#define FCV_FEATURES_HPP_

#include <complex>
#include <vector>

#include "fcv/audio.hpp"
#include "fcv/rng.hpp"

namespace fcv {

// Hann-windowed STFT parameters. n_fft must be a power of two and
// 0 < hop <= n_fft. center=true reflect-pads by n_fft/2 on both sides.
struct StftConfig {
  int n_fft = 1024;
  int hop = 256;
  bool center = true;
};

// Window/hop defaults per stage rate: 1024/256 up to 8 kHz, 2048/512 above.
StftConfig default_stft_for_rate(int sample_rate);

// One-sided complex STFT, (n_fft/2 + 1) x n_frames, row-major.
struct Spectrogram {
  int n_bins = 0;
  int n_frames = 0;
  std::vector<std::complex<double>> values;

  std::complex<double>& at(int bin, int frame) {
    return values[static_cast<size_t>(bin) * n_frames + frame];
  }
  const std::complex<double>& at(int bin, int frame) const {
    return values[static_cast<size_t>(bin) * n_frames + frame];
  }
};

Spectrogram stft(const AudioClip& clip, const StftConfig& cfg);

// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular mel filters, n_mels x (n_fft/2 + 1) row-major, HTK scale,
// unit peak per filter.
struct MelFilterbank {
  int n_mels = 0;
  int n_fft = 0;
  int sample_rate = 0;
  double fmin = 0;
  double fmax = 0;
  std::vector<double> weights;
  // Nonzero column span [begin, end) per row, for sparse application.
  std::vector<int> row_begin;
  std::vector<int> row_end;

  int n_bins() const { return n_fft / 2 + 1; }
  double weight(int mel, int bin) const {
    return weights[static_cast<size_t>(mel) * n_bins() + bin];
  }
};

MelFilterbank mel_filterbank(int sample_rate, int n_fft, int n_mels,
                             double fmin, double fmax);

constexpr double kLogMelFloorDb = -100.0;
constexpr double kLogMelEps = 1e-10;

// dB-scaled mel spectrogram, mel_bins x n_frames row-major. All values are
// finite and >= kLogMelFloorDb.
struct LogMelSpectrogram {
  int mel_bins = 0;
  int n_frames = 0;
  double frame_rate = 0.0;  // frames per second
  int source_rate = 0;
  std::vector<double> values;

  double& at(int mel, int frame) {
    return values[static_cast<size_t>(mel) * n_frames + frame];
  }
  double at(int mel, int frame) const {
    return values[static_cast<size_t>(mel) * n_frames + frame];
  }
};

// fmax <= 0 means sample_rate / 2.
LogMelSpectrogram log_mel(const AudioClip& clip, int n_mels,
                          const StftConfig& cfg, double fmin = 50.0,
                          double fmax = -1.0);

// Training-time masking policy. Widths are inclusive upper bounds on the
// sampled mask sizes.
struct SpecAugmentPolicy {
  int num_freq_masks = 2;
  int max_freq_width = 16;
  int num_time_masks = 2;
  int max_time_width = 24;
  double fill = kLogMelFloorDb;
};

// For each mask, width w ~ U{0..max} then start ~ U{0..dim-w}; masked rows
// (columns) are set to policy.fill. Frequency masks are drawn before time
// masks. The generator is the only source of randomness.
void spec_augment_inplace(LogMelSpectrogram& spec, const SpecAugmentPolicy& policy,
                          Rng& rng);
LogMelSpectrogram spec_augment(const LogMelSpectrogram& spec,
                               const SpecAugmentPolicy& policy, Rng& rng);

// Cyclic repetition of columns until the spectrogram has at least
// min_frames frames. No-op when already long enough.
LogMelSpectrogram repeat_pad_frames(const LogMelSpectrogram& spec, int min_frames);

}  // namespace fcv

#endif  // FCV_FEATURES_HPP_
