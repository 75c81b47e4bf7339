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
//
// Deterministic synthetic audio. The screening corpus uses band-limited
// noise bursts whose passband depends on the class, with gain and duration
// jitter as nuisance factors. The proxy corpus carries four multi-label tag
// classes for stage-2 pretraining.

#ifndef FCV_SYNTH_HPP_
#define FCV_SYNTH_HPP_

#include <array>
#include <filesystem>
#include <vector>

#include "fcv/audio.hpp"
#include "fcv/manifest.hpp"
#include "fcv/models.hpp"
#include "fcv/rng.hpp"

namespace fcv {

struct CorpusSpec {
  int clips_per_case = 600;
  double min_seconds = 0.5;
  double max_seconds = 0.9;
  double pos_band_lo = 300.0;
  double pos_band_hi = 800.0;
  double neg_band_lo = 1200.0;
  double neg_band_hi = 1800.0;
  double min_gain = 0.25;
  double max_gain = 0.9;
};

// White noise restricted to [f_lo, f_hi] by frequency-domain masking, with
// short raised-cosine fades and peak normalized to `gain`.
AudioClip synth_band_noise(int sample_rate, int n_samples, double f_lo, double f_hi,
                           double gain, Rng& rng);

// Writes WAV files plus a manifest CSV for one case; clips are generated at
// the case's anchor rate. Returns the manifest (paths absolute).
DatasetManifest generate_corpus_case(CaseId id, const CorpusSpec& spec, uint64_t seed,
                                     const std::filesystem::path& out_dir);

// All three cases. Writes per-case manifests (manifest_case_4k.csv, ...)
// plus a combined manifest.csv.
DatasetManifest generate_corpus(const CorpusSpec& spec, uint64_t seed,
                                const std::filesystem::path& out_dir);

struct ProxyClip {
  AudioClip clip;
  std::array<int, kNumProxyTags> tags;  // sine, chirp, noise burst, click train
};

std::vector<ProxyClip> generate_proxy_corpus(int sample_rate, int n, double seconds,
                                             uint64_t seed);

}  // namespace fcv

#endif  // FCV_SYNTH_HPP_
