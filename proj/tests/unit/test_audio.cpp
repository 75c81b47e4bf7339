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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>

#include "doctest.h"
#include "fcv/audio.hpp"
#include "support/test_util.hpp"

using namespace fcv;
using fcv::testing::WavBuilder;
using fcv::testing::fft_bin_hz;
using fcv::testing::fft_peak_hz;
using fcv::testing::sine_clip;

TEST_CASE("decode: 1 s of 16-bit mono PCM at 8000 Hz") {
  std::vector<int16_t> samples(8000, 1000);
  const auto bytes = WavBuilder().rate(8000).pcm16(samples).build();
  const AudioClip clip = decode_wav(bytes);
  CHECK(clip.samples.size() == 8000);
  CHECK(clip.sample_rate == 8000);
  CHECK(clip.samples[0] == doctest::Approx(1000.0 / 32768.0));
}

TEST_CASE("decode: stereo downmix is the per-sample channel mean") {
  // L = +0.5, R = -0.5 -> exactly 0.
  std::vector<int16_t> frames = {16384, -16384, 8192, 8192};
  const auto bytes = WavBuilder().channels(2).pcm16(frames).build();
  const AudioClip clip = decode_wav(bytes);
  REQUIRE(clip.samples.size() == 2);
  CHECK(clip.samples[0] == doctest::Approx(0.0));
  CHECK(clip.samples[1] == doctest::Approx(8192.0 / 32768.0));
}

TEST_CASE("decode: RIFX magic raises MalformedContainer") {
  const auto bytes = WavBuilder().magic("RIFX").pcm16({0, 0}).build();
  CHECK_THROWS_AS(decode_wav(bytes), MalformedContainer);
}

TEST_CASE("decode: truncated container raises MalformedContainer") {
  auto bytes = WavBuilder().pcm16(std::vector<int16_t>(100, 7)).build();
  bytes.resize(bytes.size() - 37);
  CHECK_THROWS_AS(decode_wav(bytes), MalformedContainer);
}

TEST_CASE("decode: unsupported codec raises UnsupportedEncoding") {
  const auto adpcm = WavBuilder().format(2).pcm16({0, 0}).build();
  CHECK_THROWS_AS(decode_wav(adpcm), UnsupportedEncoding);
  const auto pcm24ish = WavBuilder().bits(8).pcm16({0, 0}).build();
  CHECK_THROWS_AS(decode_wav(pcm24ish), UnsupportedEncoding);
}

TEST_CASE("decode: float WAV with NaN/Inf is sanitized and clamped") {
  const float inf = std::numeric_limits<float>::infinity();
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const auto bytes =
      WavBuilder().format(3).bits(32).float32({0.25f, nan, inf, -inf, 2.0f, -2.0f}).build();
  const AudioClip clip = decode_wav(bytes);
  REQUIRE(clip.samples.size() == 6);
  for (double v : clip.samples) {
    CHECK(std::isfinite(v));
    CHECK(std::abs(v) <= 1.0);
  }
  CHECK(clip.samples[0] == doctest::Approx(0.25));
  CHECK(clip.samples[1] == 0.0);
  CHECK(clip.samples[4] == 1.0);
  CHECK(clip.samples[5] == -1.0);
}

TEST_CASE("decode: fuzzed random bytes never produce NaN or out-of-range output") {
  Rng rng(7);
  int decoded = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int16_t> samples(static_cast<size_t>(rng.uniform_int(1, 64)));
    for (auto& s : samples) s = static_cast<int16_t>(rng.uniform_int(-32768, 32767));
    auto bytes = WavBuilder().rate(static_cast<uint32_t>(rng.uniform_int(1000, 50000)))
                     .pcm16(samples)
                     .build();
    // Corrupt a few random bytes.
    for (int j = 0; j < 3; ++j) {
      bytes[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(bytes.size()) - 1))] =
          static_cast<uint8_t>(rng.uniform_int(0, 255));
    }
    try {
      const AudioClip clip = decode_wav(bytes);
      ++decoded;
      for (double v : clip.samples) {
        CHECK(std::isfinite(v));
        CHECK(std::abs(v) <= 1.0);
      }
    } catch (const Error&) {
      // rejecting corrupt input is fine; crashing or NaN is not
    }
  }
  CHECK(decoded > 0);
}

TEST_CASE("encode/decode round trip") {
  const AudioClip clip = sine_clip(8000, 0.25, 440.0);
  const AudioClip back = decode_wav(encode_wav_pcm16(clip));
  REQUIRE(back.samples.size() == clip.samples.size());
  double worst = 0.0;
  for (size_t i = 0; i < back.samples.size(); ++i) {
    worst = std::max(worst, std::abs(back.samples[i] - clip.samples[i]));
  }
  CHECK(worst < 1e-4);  // 16-bit quantization
}

TEST_CASE("resample: identity when rates match is bit-identical") {
  const AudioClip clip = sine_clip(8000, 0.5, 440.0);
  const AudioClip out = resample(clip, 8000);
  REQUIRE(out.samples.size() == clip.samples.size());
  CHECK(std::memcmp(out.samples.data(), clip.samples.data(),
                    clip.samples.size() * sizeof(double)) == 0);
}

TEST_CASE("resample: constant signal is preserved in the interior") {
  AudioClip clip;
  clip.sample_rate = 8000;
  clip.samples.assign(8000, 0.7);
  const AudioClip out = resample(clip, 4000);
  REQUIRE(out.samples.size() == 4000);
  for (size_t i = 100; i + 100 < out.samples.size(); ++i) {
    CHECK(std::abs(out.samples[i] - 0.7) < 1e-3);
  }
}

TEST_CASE("resample: 440 Hz sine at 48 kHz to 32 kHz keeps its FFT peak") {
  const AudioClip clip = sine_clip(48000, 1.0, 440.0);
  const AudioClip out = resample(clip, 32000);
  CHECK(out.sample_rate == 32000);
  // Duration preserved within one output sample.
  CHECK(std::abs(static_cast<double>(out.samples.size()) - 32000.0) <= 1.0);
  CHECK(std::abs(fft_peak_hz(out) - 440.0) <= fft_bin_hz(out));
}

TEST_CASE("resample: round trip preserves a band-limited dominant peak") {
  Rng rng(11);
  for (int trial = 0; trial < 8; ++trial) {
    const int r1 = 48000, r2 = trial % 2 == 0 ? 32000 : 8000;
    const double freq = rng.uniform(200.0, 3500.0);
    const AudioClip clip = sine_clip(r1, 0.5, freq);
    const AudioClip down = resample(clip, r2);
    const AudioClip back = resample(down, r1);
    CHECK(std::abs(fft_peak_hz(back) - freq) <= fft_bin_hz(back) + fft_bin_hz(down));
  }
}

TEST_CASE("resample: 44100 to 48000 rational ratio") {
  const AudioClip clip = sine_clip(44100, 0.5, 1000.0);
  const AudioClip out = resample(clip, 48000);
  CHECK(std::abs(fft_peak_hz(out) - 1000.0) <= fft_bin_hz(out));
}

TEST_CASE("route: anchors map to their own cases") {
  CHECK(route(4000).id == CaseId::kCase4k);
  CHECK(route(8000).id == CaseId::kCase8k);
  CHECK(route(48000).id == CaseId::kCase48k);
}

TEST_CASE("route: acceptance inputs") {
  CHECK(route(44100).id == CaseId::kCase48k);
  CHECK(route(16000).id == CaseId::kCase8k);
  CHECK(route(6000).id == CaseId::kCase8k);  // tie resolved upward
}

TEST_CASE("route: tie at 28000 goes to the higher anchor") {
  CHECK(route(28000).id == CaseId::kCase48k);
}

TEST_CASE("route: total and consistent with the abs-difference rule") {
  Rng rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    const int rate = static_cast<int>(rng.uniform_int(1, 200000));
    const CaseConfig& c = route(rate);
    for (const auto& other : case_table()) {
      const int64_t mine = std::llabs(int64_t{rate} - c.anchor_rate);
      const int64_t theirs = std::llabs(int64_t{rate} - other.anchor_rate);
      CHECK(mine <= theirs);
      if (mine == theirs) CHECK(c.anchor_rate >= other.anchor_rate);
    }
    CHECK(route(rate).id == c.id);  // deterministic
  }
}

TEST_CASE("case table invariants follow the routing contract") {
  const CaseConfig& c4 = case_config(CaseId::kCase4k);
  CHECK(c4.stage1_rate == 4000);
  CHECK(c4.stage1_mel_bins == 256);
  CHECK(c4.stage2_rate == 8000);
  CHECK(c4.stage2_mel_bins == 128);
  CHECK(c4.stage2_tap == Stage2Tap::kConvBlock6Gem);
  CHECK_FALSE(c4.stage2_wavegram);
  const CaseConfig& c8 = case_config(CaseId::kCase8k);
  CHECK(c8.stage1_rate == 8000);
  CHECK(c8.stage1_mel_bins == 128);
  CHECK(c8.stage2_rate == 8000);
  CHECK(c8.stage2_tap == Stage2Tap::kEmbeddingLayer);
  CHECK_FALSE(c8.stage2_wavegram);
  const CaseConfig& c48 = case_config(CaseId::kCase48k);
  CHECK(c48.stage1_rate == 48000);
  CHECK(c48.stage1_mel_bins == 128);
  CHECK(c48.stage2_rate == 32000);
  CHECK(c48.stage2_mel_bins == 128);
  CHECK(c48.stage2_tap == Stage2Tap::kEmbeddingLayer);
  CHECK(c48.stage2_wavegram);
}
