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

#include "fcv/features.hpp"

#include <algorithm>
#include <cmath>

#include "fcv/fft.hpp"

namespace fcv {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Reflection without edge repetition, bouncing for arbitrarily long
// excursions. n == 1 degenerates to a constant extension.
int64_t reflect_index(int64_t i, int64_t n) {
  if (n == 1) return 0;
  const int64_t period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

void validate(const StftConfig& cfg) {
  if (cfg.n_fft <= 0 || !is_pow2(static_cast<size_t>(cfg.n_fft))) {
    throw Error("stft: n_fft must be a power of two");
  }
  if (cfg.hop <= 0 || cfg.hop > cfg.n_fft) {
    throw Error("stft: hop must satisfy 0 < hop <= n_fft");
  }
}

}  // namespace

StftConfig default_stft_for_rate(int sample_rate) {
  if (sample_rate > 8000) return StftConfig{2048, 512, true};
  return StftConfig{1024, 256, true};
}

Spectrogram stft(const AudioClip& clip, const StftConfig& cfg) {
  validate(cfg);
  const int64_t len = static_cast<int64_t>(clip.samples.size());
  if (len == 0) throw ClipTooShort("stft: empty clip");
  if (!cfg.center && len < cfg.n_fft) {
    throw ClipTooShort("stft: clip shorter than n_fft with center=false");
  }

  const int n_frames = cfg.center
                           ? 1 + static_cast<int>(len / cfg.hop)
                           : 1 + static_cast<int>((len - cfg.n_fft) / cfg.hop);
  const int n_bins = cfg.n_fft / 2 + 1;

  // Periodic Hann.
  std::vector<double> window(static_cast<size_t>(cfg.n_fft));
  for (int i = 0; i < cfg.n_fft; ++i) {
    window[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(kTwoPi * i / cfg.n_fft);
  }

  Spectrogram out;
  out.n_bins = n_bins;
  out.n_frames = n_frames;
  out.values.assign(static_cast<size_t>(n_bins) * n_frames, {0.0, 0.0});

  Fft plan(static_cast<size_t>(cfg.n_fft));
  std::vector<std::complex<double>> buf(static_cast<size_t>(cfg.n_fft));
  const int64_t offset = cfg.center ? -cfg.n_fft / 2 : 0;
  for (int t = 0; t < n_frames; ++t) {
    const int64_t start = static_cast<int64_t>(t) * cfg.hop + offset;
    for (int i = 0; i < cfg.n_fft; ++i) {
      int64_t idx = start + i;
      if (cfg.center) idx = reflect_index(idx, len);
      buf[static_cast<size_t>(i)] = clip.samples[static_cast<size_t>(idx)] *
                                    window[static_cast<size_t>(i)];
    }
    plan.forward(buf);
    for (int k = 0; k < n_bins; ++k) out.at(k, t) = buf[static_cast<size_t>(k)];
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(int sample_rate, int n_fft, int n_mels,
                             double fmin, double fmax) {
  if (sample_rate <= 0 || n_fft <= 0 || n_mels <= 0) {
    throw InvalidBand("mel_filterbank: non-positive argument");
  }
  const double nyquist = sample_rate / 2.0;
  if (!(0.0 <= fmin && fmin < fmax && fmax <= nyquist)) {
    throw InvalidBand("mel_filterbank: need 0 <= fmin < fmax <= rate/2");
  }
  const int n_bins = n_fft / 2 + 1;
  if (n_mels > n_bins) {
    throw InvalidBand("mel_filterbank: n_mels exceeds n_fft/2 + 1");
  }

  std::vector<double> hz_pts(static_cast<size_t>(n_mels) + 2);
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  for (int i = 0; i < n_mels + 2; ++i) {
    hz_pts[static_cast<size_t>(i)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }

  MelFilterbank bank;
  bank.n_mels = n_mels;
  bank.n_fft = n_fft;
  bank.sample_rate = sample_rate;
  bank.fmin = fmin;
  bank.fmax = fmax;
  bank.weights.assign(static_cast<size_t>(n_mels) * n_bins, 0.0);
  bank.row_begin.assign(static_cast<size_t>(n_mels), n_bins);
  bank.row_end.assign(static_cast<size_t>(n_mels), 0);

  const double bin_hz = static_cast<double>(sample_rate) / n_fft;
  for (int m = 0; m < n_mels; ++m) {
    const double left = hz_pts[static_cast<size_t>(m)];
    const double peak = hz_pts[static_cast<size_t>(m) + 1];
    const double right = hz_pts[static_cast<size_t>(m) + 2];
    if (!(left < peak && peak < right)) {
      throw InvalidBand("mel_filterbank: degenerate filter (band too narrow)");
    }
    bool any = false;
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      const double w = std::min((f - left) / (peak - left), (right - f) / (right - peak));
      if (w > 0.0) {
        bank.weights[static_cast<size_t>(m) * n_bins + k] = w;
        bank.row_begin[static_cast<size_t>(m)] =
            std::min(bank.row_begin[static_cast<size_t>(m)], k);
        bank.row_end[static_cast<size_t>(m)] = k + 1;
        any = true;
      }
    }
    if (!any) {
      throw InvalidBand("mel_filterbank: filter " + std::to_string(m) +
                        " covers no FFT bin; reduce n_mels or widen the band");
    }
  }
  return bank;
}

LogMelSpectrogram log_mel(const AudioClip& clip, int n_mels,
                          const StftConfig& cfg, double fmin, double fmax) {
  if (fmax <= 0.0) fmax = clip.sample_rate / 2.0;
  const MelFilterbank bank = mel_filterbank(clip.sample_rate, cfg.n_fft, n_mels, fmin, fmax);
  const Spectrogram spec = stft(clip, cfg);

  LogMelSpectrogram out;
  out.mel_bins = n_mels;
  out.n_frames = spec.n_frames;
  out.frame_rate = static_cast<double>(clip.sample_rate) / cfg.hop;
  out.source_rate = clip.sample_rate;
  out.values.assign(static_cast<size_t>(n_mels) * spec.n_frames, 0.0);

  std::vector<double> power(static_cast<size_t>(spec.n_bins));
  for (int t = 0; t < spec.n_frames; ++t) {
    for (int k = 0; k < spec.n_bins; ++k) power[static_cast<size_t>(k)] = std::norm(spec.at(k, t));
    for (int m = 0; m < n_mels; ++m) {
      double acc = 0.0;
      const int b0 = bank.row_begin[static_cast<size_t>(m)];
      const int b1 = bank.row_end[static_cast<size_t>(m)];
      for (int k = b0; k < b1; ++k) acc += bank.weight(m, k) * power[static_cast<size_t>(k)];
      out.at(m, t) = 10.0 * std::log10(std::max(acc, kLogMelEps));
    }
  }
  return out;
}

void spec_augment_inplace(LogMelSpectrogram& spec, const SpecAugmentPolicy& policy,
                          Rng& rng) {
  if (policy.num_freq_masks < 0 || policy.num_time_masks < 0 ||
      policy.max_freq_width < 0 || policy.max_time_width < 0) {
    throw Error("spec_augment: negative policy field");
  }
  if ((policy.num_freq_masks > 0 && policy.max_freq_width > spec.mel_bins) ||
      (policy.num_time_masks > 0 && policy.max_time_width > spec.n_frames)) {
    throw Error("spec_augment: mask width exceeds spectrogram dimension");
  }
  for (int i = 0; i < policy.num_freq_masks; ++i) {
    const int w = static_cast<int>(rng.uniform_int(0, policy.max_freq_width));
    const int f0 = static_cast<int>(rng.uniform_int(0, spec.mel_bins - w));
    for (int m = f0; m < f0 + w; ++m) {
      for (int t = 0; t < spec.n_frames; ++t) spec.at(m, t) = policy.fill;
    }
  }
  for (int i = 0; i < policy.num_time_masks; ++i) {
    const int w = static_cast<int>(rng.uniform_int(0, policy.max_time_width));
    const int t0 = static_cast<int>(rng.uniform_int(0, spec.n_frames - w));
    for (int m = 0; m < spec.mel_bins; ++m) {
      for (int t = t0; t < t0 + w; ++t) spec.at(m, t) = policy.fill;
    }
  }
}

LogMelSpectrogram spec_augment(const LogMelSpectrogram& spec,
                               const SpecAugmentPolicy& policy, Rng& rng) {
  LogMelSpectrogram out = spec;
  spec_augment_inplace(out, policy, rng);
  return out;
}

LogMelSpectrogram repeat_pad_frames(const LogMelSpectrogram& spec, int min_frames) {
  if (spec.n_frames >= min_frames) return spec;
  if (spec.n_frames <= 0) throw InputTooSmall("repeat_pad_frames: empty spectrogram");
  LogMelSpectrogram out;
  out.mel_bins = spec.mel_bins;
  out.n_frames = min_frames;
  out.frame_rate = spec.frame_rate;
  out.source_rate = spec.source_rate;
  out.values.assign(static_cast<size_t>(spec.mel_bins) * min_frames, 0.0);
  for (int m = 0; m < spec.mel_bins; ++m) {
    for (int t = 0; t < min_frames; ++t) {
      out.at(m, t) = spec.at(m, t % spec.n_frames);
    }
  }
  return out;
}

}  // namespace fcv
