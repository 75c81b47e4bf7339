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

#include "fcv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>

#include "fcv/fft.hpp"

namespace fcv {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void apply_fades(std::vector<double>& x, int rate) {
  const int fade = std::min<int>(rate / 100, static_cast<int>(x.size()) / 4);  // 10 ms
  for (int i = 0; i < fade; ++i) {
    const double w = 0.5 - 0.5 * std::cos(kTwoPi * 0.5 * i / fade);
    x[static_cast<size_t>(i)] *= w;
    x[x.size() - 1 - static_cast<size_t>(i)] *= w;
  }
}

void normalize_peak(std::vector<double>& x, double gain) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0) return;
  const double s = gain / peak;
  for (double& v : x) v *= s;
}

}  // namespace

AudioClip synth_band_noise(int sample_rate, int n_samples, double f_lo, double f_hi,
                           double gain, Rng& rng) {
  const size_t m = next_pow2(static_cast<size_t>(n_samples));
  std::vector<std::complex<double>> spec(m, {0.0, 0.0});
  const int64_t k_lo = std::max<int64_t>(1, static_cast<int64_t>(std::ceil(f_lo * m / sample_rate)));
  const int64_t k_hi = std::min<int64_t>(static_cast<int64_t>(m) / 2 - 1,
                                         static_cast<int64_t>(std::floor(f_hi * m / sample_rate)));
  for (int64_t k = k_lo; k <= k_hi; ++k) {
    const double phase = rng.uniform(0.0, kTwoPi);
    const std::complex<double> v(std::cos(phase), std::sin(phase));
    spec[static_cast<size_t>(k)] = v;
    spec[m - static_cast<size_t>(k)] = std::conj(v);
  }
  Fft plan(m);
  plan.inverse(spec);
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(static_cast<size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) clip.samples[static_cast<size_t>(i)] = spec[static_cast<size_t>(i)].real();
  apply_fades(clip.samples, sample_rate);
  normalize_peak(clip.samples, gain);
  return clip;
}

DatasetManifest generate_corpus_case(CaseId id, const CorpusSpec& spec, uint64_t seed,
                                     const std::filesystem::path& out_dir) {
  const CaseConfig& cfg = case_config(id);
  const int rate = cfg.anchor_rate;
  std::string tag = to_string(id);
  std::transform(tag.begin(), tag.end(), tag.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const std::filesystem::path dir = out_dir / tag;
  std::filesystem::create_directories(dir);

  Rng rng = Rng(seed).fork(static_cast<uint64_t>(id) + 11);
  DatasetManifest manifest;
  for (int i = 0; i < spec.clips_per_case; ++i) {
    const int label = i % 2;  // alternate so both classes stay balanced
    const double dur = rng.uniform(spec.min_seconds, spec.max_seconds);
    const double gain = rng.uniform(spec.min_gain, spec.max_gain);
    const int n = std::max(1, static_cast<int>(std::lround(dur * rate)));
    const double lo = label == 1 ? spec.pos_band_lo : spec.neg_band_lo;
    const double hi = label == 1 ? spec.pos_band_hi : spec.neg_band_hi;
    AudioClip clip = synth_band_noise(rate, n, lo, hi, gain, rng);

    char name[64];
    std::snprintf(name, sizeof(name), "%s_%04d.wav", tag.c_str(), i);
    const std::filesystem::path path = dir / name;
    const auto bytes = encode_wav_pcm16(clip);
    {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("gen-synthetic: cannot write " + path.string());
      out.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
    }

    ManifestRow row;
    row.uuid = std::string(tag) + "-" + std::to_string(i);
    row.path = path.string();
    row.label = label;
    manifest.rows.push_back(std::move(row));
  }
  char csv_name[64];
  std::snprintf(csv_name, sizeof(csv_name), "manifest_%s.csv", tag.c_str());
  manifest.save_csv(out_dir / csv_name);
  return manifest;
}

DatasetManifest generate_corpus(const CorpusSpec& spec, uint64_t seed,
                                const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  DatasetManifest all;
  for (CaseId id : {CaseId::kCase4k, CaseId::kCase8k, CaseId::kCase48k}) {
    DatasetManifest m = generate_corpus_case(id, spec, seed, out_dir);
    all.rows.insert(all.rows.end(), m.rows.begin(), m.rows.end());
  }
  all.save_csv(out_dir / "manifest.csv");
  return all;
}

std::vector<ProxyClip> generate_proxy_corpus(int sample_rate, int n, double seconds,
                                             uint64_t seed) {
  std::vector<ProxyClip> out;
  out.reserve(static_cast<size_t>(n));
  Rng base = Rng(seed).fork(99);
  const int len = std::max(1, static_cast<int>(std::lround(seconds * sample_rate)));
  for (int i = 0; i < n; ++i) {
    Rng rng = base.fork(static_cast<uint64_t>(i));
    ProxyClip pc;
    pc.tags.fill(0);
    for (int t = 0; t < kNumProxyTags; ++t) pc.tags[static_cast<size_t>(t)] = rng.uniform01() < 0.5;
    bool any = false;
    for (int t : pc.tags) any = any || t;
    if (!any) pc.tags[static_cast<size_t>(rng.uniform_int(0, kNumProxyTags - 1))] = 1;

    std::vector<double> mix(static_cast<size_t>(len), 0.0);
    const double nyq = sample_rate / 2.0;
    if (pc.tags[0]) {  // sine
      const double f = rng.uniform(100.0, 0.4 * sample_rate);
      const double phase = rng.uniform(0.0, kTwoPi);
      const double g = rng.uniform(0.5, 1.0);
      for (int j = 0; j < len; ++j) {
        mix[static_cast<size_t>(j)] += g * std::sin(kTwoPi * f * j / sample_rate + phase);
      }
    }
    if (pc.tags[1]) {  // linear chirp
      double f0 = rng.uniform(100.0, 0.45 * sample_rate);
      double f1 = rng.uniform(100.0, 0.45 * sample_rate);
      if (f0 > f1) std::swap(f0, f1);
      const double g = rng.uniform(0.5, 1.0);
      const double rate_per_sample = (f1 - f0) / len;
      double phase = rng.uniform(0.0, kTwoPi);
      for (int j = 0; j < len; ++j) {
        const double f = f0 + rate_per_sample * j;
        phase += kTwoPi * f / sample_rate;
        mix[static_cast<size_t>(j)] += g * std::sin(phase);
      }
    }
    if (pc.tags[2]) {  // band-limited noise burst
      const double lo = rng.uniform(0.05 * sample_rate, 0.3 * sample_rate);
      const double hi = std::min(lo + rng.uniform(0.05 * sample_rate, 0.15 * sample_rate),
                                 0.95 * nyq);
      AudioClip burst = synth_band_noise(sample_rate, len, lo, hi, rng.uniform(0.5, 1.0), rng);
      for (int j = 0; j < len; ++j) mix[static_cast<size_t>(j)] += burst.samples[static_cast<size_t>(j)];
    }
    if (pc.tags[3]) {  // click train with exponential decay
      const int period = std::max(1, static_cast<int>(std::lround(rng.uniform(0.02, 0.08) * sample_rate)));
      const double tau = 0.005 * sample_rate;
      const double g = rng.uniform(0.5, 1.0);
      const int offset = static_cast<int>(rng.uniform_int(0, period - 1));
      for (int start = offset; start < len; start += period) {
        for (int j = start; j < std::min(len, start + 4 * static_cast<int>(tau)); ++j) {
          mix[static_cast<size_t>(j)] += g * std::exp(-(j - start) / tau);
        }
      }
    }
    apply_fades(mix, sample_rate);
    normalize_peak(mix, rng.uniform(0.4, 0.9));
    pc.clip.sample_rate = sample_rate;
    pc.clip.samples = std::move(mix);
    pc.clip.source_id = "proxy-" + std::to_string(i);
    out.push_back(std::move(pc));
  }
  return out;
}

}  // namespace fcv
