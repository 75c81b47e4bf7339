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

#include "fcv/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace fcv {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

struct ByteReader {
  const uint8_t* p;
  size_t n;
  size_t pos = 0;

  void need(size_t k, const char* what) {
    if (pos + k > n) throw MalformedContainer(std::string("wav: truncated ") + what);
  }
  uint16_t u16(const char* what) {
    need(2, what);
    const uint16_t v = static_cast<uint16_t>(p[pos]) |
                       static_cast<uint16_t>(p[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  uint32_t u32(const char* what) {
    need(4, what);
    const uint32_t v = static_cast<uint32_t>(p[pos]) |
                       static_cast<uint32_t>(p[pos + 1]) << 8 |
                       static_cast<uint32_t>(p[pos + 2]) << 16 |
                       static_cast<uint32_t>(p[pos + 3]) << 24;
    pos += 4;
    return v;
  }
  void fourcc(char out[4], const char* what) {
    need(4, what);
    std::memcpy(out, p + pos, 4);
    pos += 4;
  }
};

double clamp_sample(double x) {
  if (!std::isfinite(x)) return 0.0;
  return std::clamp(x, -1.0, 1.0);
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_tag(std::vector<uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

std::vector<uint8_t> encode_wav(const AudioClip& clip, bool float32) {
  const uint16_t bits = float32 ? 32 : 16;
  const uint32_t data_size = static_cast<uint32_t>(clip.samples.size() * bits / 8);
  std::vector<uint8_t> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, float32 ? 3 : 1);
  put_u16(out, 1);
  put_u32(out, static_cast<uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<uint32_t>(clip.sample_rate) * bits / 8);
  put_u16(out, bits / 8);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_size);
  for (double s : clip.samples) {
    const double c = clamp_sample(s);
    if (float32) {
      const float f = static_cast<float>(c);
      uint32_t u;
      std::memcpy(&u, &f, 4);
      put_u32(out, u);
    } else {
      const int v = static_cast<int>(std::lround(c * 32767.0));
      put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(v)));
    }
  }
  return out;
}

// Kaiser window helper: modified Bessel function of the first kind, order 0.
double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double half = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half / k) * (half / k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

const char* to_string(CaseId id) {
  switch (id) {
    case CaseId::kCase4k: return "CASE_4K";
    case CaseId::kCase8k: return "CASE_8K";
    case CaseId::kCase48k: return "CASE_48K";
  }
  return "?";
}

const char* to_string(Stage2Tap tap) {
  return tap == Stage2Tap::kConvBlock6Gem ? "conv_block6_gem" : "embedding_layer";
}

CaseId case_id_from_string(const std::string& s) {
  if (s == "CASE_4K") return CaseId::kCase4k;
  if (s == "CASE_8K") return CaseId::kCase8k;
  if (s == "CASE_48K") return CaseId::kCase48k;
  throw Error("unknown case id: " + s);
}

Stage2Tap tap_from_string(const std::string& s) {
  if (s == "conv_block6_gem") return Stage2Tap::kConvBlock6Gem;
  if (s == "embedding_layer") return Stage2Tap::kEmbeddingLayer;
  throw Error("unknown tap: " + s);
}

const std::array<CaseConfig, 3>& case_table() {
  static const std::array<CaseConfig, 3> table = {{
      {CaseId::kCase4k, 4000, 4000, 256, 8000, 128, Stage2Tap::kConvBlock6Gem, false},
      {CaseId::kCase8k, 8000, 8000, 128, 8000, 128, Stage2Tap::kEmbeddingLayer, false},
      {CaseId::kCase48k, 48000, 48000, 128, 32000, 128, Stage2Tap::kEmbeddingLayer, true},
  }};
  return table;
}

const CaseConfig& case_config(CaseId id) {
  for (const auto& c : case_table()) {
    if (c.id == id) return c;
  }
  throw Error("case_config: unknown id");
}

const CaseConfig& route(int sample_rate) {
  if (sample_rate <= 0) throw Error("route: sample_rate must be positive");
  const auto& table = case_table();
  const CaseConfig* best = &table[0];
  int64_t best_diff = std::llabs(int64_t{sample_rate} - best->anchor_rate);
  for (const auto& c : table) {
    const int64_t diff = std::llabs(int64_t{sample_rate} - c.anchor_rate);
    // Ties break toward the higher anchor; the table is sorted ascending.
    if (diff < best_diff || (diff == best_diff && c.anchor_rate > best->anchor_rate)) {
      best = &c;
      best_diff = diff;
    }
  }
  return *best;
}

std::string routes_table_text() {
  return
      "case      stage1_rate  stage1_mels  stage2_rate  stage2_mels  stage2_tap       wavegram\n"
      "CASE_4K   4000         256          8000         128          conv_block6_gem  no\n"
      "CASE_8K   8000         128          8000         128          embedding_layer  no\n"
      "CASE_48K  48000        128          32000        128          embedding_layer  yes\n";
}

AudioClip decode_wav(std::span<const uint8_t> bytes, std::string source_id) {
  ByteReader r{bytes.data(), bytes.size()};
  char tag[4];
  r.fourcc(tag, "RIFF header");
  if (std::memcmp(tag, "RIFF", 4) != 0) throw MalformedContainer("wav: not a RIFF container");
  r.u32("RIFF size");
  r.fourcc(tag, "WAVE tag");
  if (std::memcmp(tag, "WAVE", 4) != 0) throw MalformedContainer("wav: missing WAVE form");

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t data_off = 0, data_len = 0;
  bool have_data = false;

  while (r.pos + 8 <= r.n) {
    r.fourcc(tag, "chunk id");
    const uint32_t size = r.u32("chunk size");
    if (r.pos + size > r.n) throw MalformedContainer("wav: chunk overruns file");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (size < 16) throw MalformedContainer("wav: fmt chunk too small");
      ByteReader f{r.p + r.pos, size};
      format = f.u16("fmt");
      channels = f.u16("fmt");
      rate = f.u32("fmt");
      f.u32("fmt");  // byte rate
      f.u16("fmt");  // block align
      bits = f.u16("fmt");
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data_off = r.pos;
      data_len = size;
      have_data = true;
    }
    r.pos += size + (size & 1);  // chunks are word aligned
  }
  if (!have_fmt) throw MalformedContainer("wav: missing fmt chunk");
  if (!have_data) throw MalformedContainer("wav: missing data chunk");
  if (rate == 0) throw MalformedContainer("wav: zero sample rate");

  if (format == 1) {
    if (bits != 16) throw UnsupportedEncoding("wav: PCM requires 16-bit samples");
  } else if (format == 3) {
    if (bits != 32) throw UnsupportedEncoding("wav: float requires 32-bit samples");
  } else {
    throw UnsupportedEncoding("wav: unsupported format code " + std::to_string(format));
  }
  if (channels != 1 && channels != 2) {
    throw UnsupportedEncoding("wav: unsupported channel count " + std::to_string(channels));
  }

  const size_t bytes_per_sample = bits / 8;
  const size_t block = bytes_per_sample * channels;
  if (data_len % block != 0) throw MalformedContainer("wav: data size not frame aligned");
  const size_t frames = data_len / block;
  if (frames == 0) throw MalformedContainer("wav: empty data chunk");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.source_id = std::move(source_id);
  clip.samples.resize(frames);
  const uint8_t* d = bytes.data() + data_off;
  for (size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int ch = 0; ch < channels; ++ch) {
      const uint8_t* s = d + i * block + ch * bytes_per_sample;
      double v;
      if (format == 1) {
        const int16_t raw = static_cast<int16_t>(
            static_cast<uint16_t>(s[0]) | static_cast<uint16_t>(s[1]) << 8);
        v = static_cast<double>(raw) / 32768.0;
      } else {
        uint32_t u = static_cast<uint32_t>(s[0]) | static_cast<uint32_t>(s[1]) << 8 |
                     static_cast<uint32_t>(s[2]) << 16 | static_cast<uint32_t>(s[3]) << 24;
        float f;
        std::memcpy(&f, &u, 4);
        v = static_cast<double>(f);
      }
      acc += clamp_sample(v);
    }
    clip.samples[i] = clamp_sample(acc / channels);
  }
  return clip;
}

std::vector<uint8_t> encode_wav_pcm16(const AudioClip& clip) { return encode_wav(clip, false); }
std::vector<uint8_t> encode_wav_float32(const AudioClip& clip) { return encode_wav(clip, true); }

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw Error("resample: target_rate must be positive");
  if (clip.samples.empty()) throw ClipTooShort("resample: empty clip");
  if (target_rate == clip.sample_rate) return clip;

  const int64_t g = std::gcd(clip.sample_rate, target_rate);
  const int64_t up = target_rate / g;
  const int64_t down = clip.sample_rate / g;

  // Prototype lowpass over the (rate * up) grid: 64 taps per phase, Kaiser
  // beta 8.6, cutoff at the tighter of the two Nyquist limits.
  const int64_t taps = 64 * up;  // filter length is taps + 1, centered
  const int64_t center = taps / 2;
  const double cutoff = 0.5 / static_cast<double>(std::max(up, down));
  const double beta = 8.6;
  const double i0b = bessel_i0(beta);
  std::vector<double> h(static_cast<size_t>(taps) + 1);
  for (int64_t i = 0; i <= taps; ++i) {
    const double t = static_cast<double>(i - center);
    const double sinc = (i == center) ? 2.0 * cutoff : std::sin(2.0 * kPi * cutoff * t) / (kPi * t);
    const double r = t / static_cast<double>(center);
    const double w = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
    h[static_cast<size_t>(i)] = sinc * w;
  }
  // Normalize each polyphase branch to unit DC gain.
  std::vector<double> phase_sum(static_cast<size_t>(up), 0.0);
  for (int64_t i = 0; i <= taps; ++i) phase_sum[static_cast<size_t>(i % up)] += h[static_cast<size_t>(i)];

  const int64_t in_len = static_cast<int64_t>(clip.samples.size());
  const int64_t out_len = (in_len * up + down - 1) / down;
  AudioClip out;
  out.sample_rate = target_rate;
  out.source_id = clip.source_id;
  out.samples.resize(static_cast<size_t>(out_len));
  for (int64_t n = 0; n < out_len; ++n) {
    const int64_t s = n * down + center;
    const int64_t m_hi = std::min(floor_div(s, up), in_len - 1);
    const int64_t m_lo = std::max<int64_t>(floor_div(s - taps + up - 1, up), 0);
    double acc = 0.0;
    for (int64_t m = m_lo; m <= m_hi; ++m) {
      acc += clip.samples[static_cast<size_t>(m)] * h[static_cast<size_t>(s - m * up)];
    }
    out.samples[static_cast<size_t>(n)] = acc / phase_sum[static_cast<size_t>(s % up)];
  }
  return out;
}

}  // namespace fcv
