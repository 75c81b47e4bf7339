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
#include "doctest.h"
#include "fcv/models.hpp"
#include "fcv/pipeline.hpp"
#include "support/test_util.hpp"

using namespace fcv;
using fcv::testing::sine_clip;

namespace {

LogMelSpectrogram flat_spec(int mels, int frames, double value) {
  LogMelSpectrogram spec;
  spec.mel_bins = mels;
  spec.n_frames = frames;
  spec.values.assign(static_cast<size_t>(mels) * frames, value);
  return spec;
}

}  // namespace

TEST_CASE("effnet: 256x17 spectrogram gives a finite logit and a 64-d embedding") {
  MiniEffNetV2<float> model(Rng(1));
  const LogMelSpectrogram spec = log_mel(sine_clip(4000, 1.0, 500.0), 256,
                                         StftConfig{1024, 250, true});
  REQUIRE(spec.n_frames == 17);
  const EffnetOut out = effnet_forward(model, spec);
  CHECK(std::isfinite(out.logit));
  CHECK(out.embedding.size() == 64);
  for (double v : out.embedding) CHECK(std::isfinite(v));
}

TEST_CASE("effnet: bit-identical outputs for bit-identical inputs") {
  MiniEffNetV2<float> model(Rng(2));
  const LogMelSpectrogram spec = log_mel(sine_clip(8000, 0.7, 700.0), 128, StftConfig{});
  const EffnetOut a = effnet_forward(model, spec);
  const EffnetOut b = effnet_forward(model, spec);
  CHECK(a.logit == b.logit);
  CHECK(a.embedding == b.embedding);
}

TEST_CASE("effnet: all-floor spectrogram stays finite") {
  MiniEffNetV2<float> model(Rng(3));
  const EffnetOut out = effnet_forward(model, flat_spec(128, 40, kLogMelFloorDb));
  CHECK(std::isfinite(out.logit));
  for (double v : out.embedding) CHECK(std::isfinite(v));
}

TEST_CASE("effnet: empty spectrogram raises InputTooSmall") {
  MiniEffNetV2<float> model(Rng(4));
  CHECK_THROWS_AS(effnet_forward(model, flat_spec(128, 0, 0.0)), InputTooSmall);
}

TEST_CASE("cnn14: tap dimensions per routing case") {
  const AudioClip clip8k = sine_clip(8000, 0.6, 600.0);
  const LogMelSpectrogram spec8k = log_mel(clip8k, 128, StftConfig{});

  MiniCnn14<float> plain(false, Rng(5));
  const auto e_gem = cnn14_forward(plain, spec8k, nullptr, Stage2Tap::kConvBlock6Gem);
  CHECK(e_gem.size() == 128);
  const auto e_emb = cnn14_forward(plain, spec8k, nullptr, Stage2Tap::kEmbeddingLayer);
  CHECK(e_emb.size() == 64);

  MiniCnn14<float> wg(true, Rng(6));
  const AudioClip clip32k = sine_clip(32000, 0.6, 600.0);
  const LogMelSpectrogram spec32k = log_mel(clip32k, 128, default_stft_for_rate(32000));
  const auto e_wg = cnn14_forward(wg, spec32k, &clip32k, Stage2Tap::kEmbeddingLayer);
  CHECK(e_wg.size() == 64);
  for (double v : e_wg) CHECK(std::isfinite(v));
}

TEST_CASE("cnn14: wavegram presence must match the model") {
  const AudioClip clip32k = sine_clip(32000, 0.5, 500.0);
  const LogMelSpectrogram spec = log_mel(clip32k, 128, default_stft_for_rate(32000));

  MiniCnn14<float> wg(true, Rng(7));
  CHECK_THROWS_AS(cnn14_forward(wg, spec, nullptr, Stage2Tap::kEmbeddingLayer), TapMismatch);

  MiniCnn14<float> plain(false, Rng(8));
  CHECK_THROWS_AS(cnn14_forward(plain, spec, &clip32k, Stage2Tap::kEmbeddingLayer),
                  TapMismatch);
}

TEST_CASE("wavegram: front-end frame count matches the log-mel grid for 0.3-10 s") {
  WavegramFrontEnd<float> fe(Rng(9));
  const StftConfig cfg = default_stft_for_rate(32000);
  for (double seconds : {0.3, 0.5, 1.0, 2.7, 10.0}) {
    const AudioClip clip = sine_clip(32000, seconds, 440.0);
    const LogMelSpectrogram spec = log_mel(clip, 128, cfg);
    Tensor<float> wave = clip_to_tensor<float>(clip);
    const Tensor<float> map = fe.forward(wave, spec.n_frames, 128, false);
    CHECK(map.shape == std::vector<int>{1, 1, 128, spec.n_frames});
  }
}

TEST_CASE("fusion: zero weights give the bias, ones give the sum") {
  FusionHead<float> head(64 + 128, Rng(10));
  for (auto& w : head.fc.w.data) w = 0.0f;
  head.fc.b.data[0] = 0.75f;
  const std::vector<double> e1(64, 0.3), e2(128, -0.2);
  CHECK(fuse_forward(head, e1, e2) == doctest::Approx(0.75));

  for (auto& w : head.fc.w.data) w = 1.0f;
  head.fc.b.data[0] = 0.0f;
  const std::vector<double> ones1(64, 1.0), ones2(128, 1.0);
  CHECK(fuse_forward(head, ones1, ones2) == doctest::Approx(192.0));
}

TEST_CASE("fusion: dimension mismatch raises DimMismatch") {
  FusionHead<float> head(64 + 64, Rng(11));
  const std::vector<double> e1(64, 0.0), e2(128, 0.0);
  CHECK_THROWS_AS(fuse_forward(head, e1, e2), DimMismatch);
}

TEST_CASE("embedding dims obey the case table end to end") {
  for (const auto& cfg : case_table()) {
    const int want_e2 = cfg.stage2_tap == Stage2Tap::kConvBlock6Gem ? 128 : 64;
    CHECK(tap_dim(cfg.stage2_tap) == want_e2);
    CaseModel model(cfg, 123);
    CHECK(model.fusion.in_dim() == 64 + want_e2);
    CHECK(model.cnn14.has_wavegram() == cfg.stage2_wavegram);
  }
}

TEST_CASE("end-to-end fuzz: random WAVs through every routed case keep logits finite") {
  std::map<CaseId, std::unique_ptr<CaseModel>> models;
  for (const auto& cfg : case_table()) {
    models[cfg.id] = std::make_unique<CaseModel>(cfg, 17);
  }
  Rng rng(2024);
  const int kCases = 1000;
  for (int trial = 0; trial < kCases; ++trial) {
    const int rate = static_cast<int>(rng.uniform_int(1, 3)) == 1
                         ? static_cast<int>(rng.uniform_int(3000, 50000))
                         : std::vector<int>{4000, 8000, 16000, 22050, 44100,
                                            48000}[static_cast<size_t>(rng.uniform_int(0, 5))];
    const double seconds = rng.uniform(0.05, 0.4);
    AudioClip clip;
    clip.sample_rate = rate;
    clip.samples.resize(static_cast<size_t>(std::max(1.0, seconds * rate)));
    for (auto& v : clip.samples) v = rng.uniform(-0.9, 0.9);

    const AudioClip decoded = decode_wav(encode_wav_pcm16(clip));
    const CaseConfig& cfg = route(decoded.sample_rate);
    const ScoreResult r = score_clip(*models[cfg.id], decoded);
    CHECK(std::isfinite(r.probability));
    CHECK(r.probability >= 0.0);
    CHECK(r.probability <= 1.0);
    CHECK(r.case_id == cfg.id);
  }
}
