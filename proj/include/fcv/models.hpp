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
// The two backbones and the fusion head. Stage 1 is a small fused-conv
// visual backbone over the spectrogram; stage 2 is a six-block audio
// backbone with two embedding taps and an optional learned waveform
// front-end whose map is concatenated with the spectrogram channel.

#ifndef FCV_MODELS_HPP_
#define FCV_MODELS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "fcv/audio.hpp"
#include "fcv/features.hpp"
#include "fcv/layers.hpp"

namespace fcv {

constexpr int kEmbedding1Dim = 64;
constexpr int kConvBlock6Dim = 128;
constexpr int kEmbeddingLayerDim = 64;
constexpr int kWavegramChannels = 32;
constexpr int kNumProxyTags = 4;

inline int tap_dim(Stage2Tap tap) {
  return tap == Stage2Tap::kConvBlock6Gem ? kConvBlock6Dim : kEmbeddingLayerDim;
}

// Converts a feature matrix into a single-sample [1,1,MEL,T] input.
template <class T>
Tensor<T> spec_to_tensor(const LogMelSpectrogram& spec) {
  if (spec.mel_bins <= 0 || spec.n_frames <= 0) {
    throw InputTooSmall("spec_to_tensor: empty spectrogram");
  }
  Tensor<T> x({1, 1, spec.mel_bins, spec.n_frames});
  for (size_t i = 0; i < spec.values.size(); ++i) x.data[i] = static_cast<T>(spec.values[i]);
  return x;
}

template <class T>
Tensor<T> clip_to_tensor(const AudioClip& clip) {
  if (clip.samples.empty()) throw InputTooSmall("clip_to_tensor: empty clip");
  Tensor<T> x({1, 1, static_cast<int>(clip.samples.size())});
  for (size_t i = 0; i < clip.samples.size(); ++i) x.data[i] = static_cast<T>(clip.samples[i]);
  return x;
}

// ---------------------------------------------------------------------------
// Stage-1 backbone: stem conv (3x3 stride 2, 16 ch), three fused conv blocks
// with output widths [16, 32, 64] (two 3x3 conv+BN+ReLU each, stride 2 on the
// first conv), GeM pooling to the 64-d embedding, then a 1-logit head.

template <class T>
class MiniEffNetV2 {
 public:
  explicit MiniEffNetV2(Rng rng)
      : stem(1, 16, 3, 2, 1, rng),
        b1a(16, 16, 2, rng), b1b(16, 16, 1, rng),
        b2a(16, 32, 2, rng), b2b(32, 32, 1, rng),
        b3a(32, 64, 2, rng), b3b(64, 64, 1, rng),
        head(kEmbedding1Dim, 1, rng) {}

  struct Out {
    Tensor<T> logits;     // [N]
    Tensor<T> embedding;  // [N, 64]
  };

  Out forward(const Tensor<T>& x, bool train) {
    if (x.ndim() != 4 || x.dim(1) != 1) throw ShapeMismatch("effnet: input must be [N,1,H,W]");
    Tensor<T> h = stem.forward(x, train);
    h = b1a.forward(h, train);
    h = b1b.forward(h, train);
    h = b2a.forward(h, train);
    h = b2b.forward(h, train);
    h = b3a.forward(h, train);
    h = b3b.forward(h, train);
    Out out;
    out.embedding = gem.forward(h, train);
    Tensor<T> logits2d = head.forward(out.embedding, train);
    out.logits = logits2d;
    out.logits.shape = {x.dim(0)};
    return out;
  }

  // glogits: [N]. Gradients accumulate into the parameter tensors.
  void backward(const Tensor<T>& glogits) {
    Tensor<T> g2d = glogits;
    g2d.shape = {glogits.dim(0), 1};
    Tensor<T> g = head.backward(g2d);
    g = gem.backward(g);
    g = b3b.backward(g);
    g = b3a.backward(g);
    g = b2b.backward(g);
    g = b2a.backward(g);
    g = b1b.backward(g);
    g = b1a.backward(g);
    stem.backward(g);
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    stem.collect(prefix + ".stem", out);
    b1a.collect(prefix + ".b1a", out);
    b1b.collect(prefix + ".b1b", out);
    b2a.collect(prefix + ".b2a", out);
    b2b.collect(prefix + ".b2b", out);
    b3a.collect(prefix + ".b3a", out);
    b3b.collect(prefix + ".b3b", out);
    gem.collect(prefix + ".gem", out);
    head.collect(prefix + ".head", out);
  }

  Conv2dLayer<T> stem;
  ConvBnRelu<T> b1a, b1b, b2a, b2b, b3a, b3b;
  GemPoolLayer<T> gem;
  LinearLayer<T> head;
};

// ---------------------------------------------------------------------------
// Learned waveform front-end: strided 1-d convs over raw 32 kHz audio, the
// 32 output channels reinterpreted as pseudo-frequency bins, time-pooled to
// the spectrogram frame grid and tiled up to the mel-bin count.

template <class T>
class WavegramFrontEnd {
 public:
  explicit WavegramFrontEnd(Rng rng)
      : conv0(1, kWavegramChannels, 11, 5, 5, rng),
        blk1(kWavegramChannels, kWavegramChannels, 3, 4, 1, rng),
        blk2(kWavegramChannels, kWavegramChannels, 3, 4, 1, rng),
        blk3(kWavegramChannels, kWavegramChannels, 3, 4, 1, rng) {}

  // wave: [N,1,S] -> map [N,1,mel_bins,out_frames]
  Tensor<T> forward(const Tensor<T>& wave, int out_frames, int mel_bins, bool train) {
    if (mel_bins % kWavegramChannels != 0) {
      throw ShapeMismatch("wavegram: mel bins must be a multiple of 32");
    }
    const int repeat = mel_bins / kWavegramChannels;
    Tensor<T> h = conv0.forward(wave, train);
    h = blk1.forward(h, train);
    h = blk2.forward(h, train);
    h = blk3.forward(h, train);
    // [N,32,L] and [N,1,32,L] share the same row-major layout.
    h.shape = {h.dim(0), 1, kWavegramChannels, h.dim(2)};
    if (train) {
      pooled_in_shape_ = h.shape;
      freq_repeat_ = repeat;
    }
    Tensor<T> pooled = nn::adaptive_avgpool_w(h, out_frames);
    Tensor<T> map({pooled.dim(0), 1, mel_bins, out_frames});
    const int N = pooled.dim(0), F = kWavegramChannels, W = out_frames;
    for (int n = 0; n < N; ++n) {
      for (int f = 0; f < mel_bins; ++f) {
        const T* src = pooled.data.data() + (static_cast<int64_t>(n) * F + f / repeat) * W;
        T* dst = map.data.data() + (static_cast<int64_t>(n) * mel_bins + f) * W;
        for (int t = 0; t < W; ++t) dst[t] = src[t];
      }
    }
    return map;
  }

  void backward(const Tensor<T>& gmap) {
    const int N = gmap.dim(0), MEL = gmap.dim(2), W = gmap.dim(3);
    const int F = kWavegramChannels;
    Tensor<T> gpooled({N, 1, F, W});
    for (int n = 0; n < N; ++n) {
      for (int f = 0; f < MEL; ++f) {
        const T* src = gmap.data.data() + (static_cast<int64_t>(n) * MEL + f) * W;
        T* dst = gpooled.data.data() + (static_cast<int64_t>(n) * F + f / freq_repeat_) * W;
        for (int t = 0; t < W; ++t) dst[t] += src[t];
      }
    }
    Tensor<T> gh(pooled_in_shape_);
    nn::adaptive_avgpool_w_backward(pooled_in_shape_, gpooled, &gh);
    gh.shape = {gh.dim(0), F, gh.dim(3)};
    Tensor<T> g = blk3.backward(gh);
    g = blk2.backward(g);
    g = blk1.backward(g);
    conv0.backward(g);
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    conv0.collect(prefix + ".conv0", out);
    blk1.collect(prefix + ".blk1", out);
    blk2.collect(prefix + ".blk2", out);
    blk3.collect(prefix + ".blk3", out);
  }

  Conv1dLayer<T> conv0;
  Conv1dBnRelu<T> blk1, blk2, blk3;

 private:
  int freq_repeat_ = 4;
  std::vector<int> pooled_in_shape_;
};

// ---------------------------------------------------------------------------
// Stage-2 backbone: six blocks of [2x(conv3x3+BN+ReLU) + 2x2 avg pool] with
// widths [16,32,64,128,128,128]. Two taps are exposed: GeM over the block-6
// map (128-d) and a pooled linear embedding (64-d). A small tag head on the
// embedding drives proxy pretraining.

template <class T>
class MiniCnn14 {
 public:
  struct Block {
    Block() = default;
    Block(int in_ch, int out_ch, Rng& rng)
        : a(in_ch, out_ch, 1, rng), b(out_ch, out_ch, 1, rng) {}
    Tensor<T> forward(const Tensor<T>& x, bool train) {
      return pool.forward(b.forward(a.forward(x, train), train), train);
    }
    Tensor<T> backward(const Tensor<T>& gy) {
      return a.backward(b.backward(pool.backward(gy)));
    }
    void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
      a.collect(prefix + ".a", out);
      b.collect(prefix + ".b", out);
    }
    ConvBnRelu<T> a, b;
    AvgPool2x2Layer<T> pool;
  };

  MiniCnn14() = default;

  MiniCnn14(bool with_wavegram, Rng rng)
      : wavegram(with_wavegram ? std::optional<WavegramFrontEnd<T>>(
                                     WavegramFrontEnd<T>(rng.fork(101)))
                               : std::nullopt) {
    Rng r = rng.fork(7);
    const int widths[6] = {16, 32, 64, 128, 128, 128};
    int in_ch = with_wavegram ? 2 : 1;
    for (int i = 0; i < 6; ++i) {
      blocks[i] = Block(in_ch, widths[i], r);
      in_ch = widths[i];
    }
    embed_fc = LinearLayer<T>(kConvBlock6Dim, kEmbeddingLayerDim, r);
    head = LinearLayer<T>(kEmbeddingLayerDim, kNumProxyTags, r);
  }

  bool has_wavegram() const { return wavegram.has_value(); }

  // spec: [N,1,MEL,T]; wave: [N,1,S] when the wavegram branch is present.
  // Returns the block-6 feature map.
  Tensor<T> forward_map(const Tensor<T>& spec, const Tensor<T>* wave, bool train) {
    if (has_wavegram() != (wave != nullptr)) {
      throw TapMismatch(has_wavegram()
                            ? "cnn14: waveform input required for the wavegram branch"
                            : "cnn14: waveform input supplied but no wavegram branch");
    }
    Tensor<T> x;
    if (wave) {
      Tensor<T> map = wavegram->forward(*wave, spec.dim(3), spec.dim(2), train);
      x = Tensor<T>({spec.dim(0), 2, spec.dim(2), spec.dim(3)});
      const int64_t plane = static_cast<int64_t>(spec.dim(2)) * spec.dim(3);
      for (int n = 0; n < spec.dim(0); ++n) {
        const T* s = spec.data.data() + n * plane;
        const T* m = map.data.data() + n * plane;
        T* dst = x.data.data() + n * 2 * plane;
        for (int64_t i = 0; i < plane; ++i) dst[i] = s[i];
        for (int64_t i = 0; i < plane; ++i) dst[plane + i] = m[i];
      }
    } else {
      x = spec;
    }
    if (train) concat_shape_ = x.shape;
    Tensor<T> h = x;
    for (auto& blk : blocks) h = blk.forward(h, train);
    return h;
  }

  // Backward from the block-6 map gradient into all stage-2 parameters.
  void backward_map(const Tensor<T>& gmap) {
    Tensor<T> g = gmap;
    for (int i = 5; i >= 0; --i) g = blocks[i].backward(g);
    if (has_wavegram()) {
      const int64_t plane = static_cast<int64_t>(concat_shape_[2]) * concat_shape_[3];
      Tensor<T> gm({concat_shape_[0], 1, concat_shape_[2], concat_shape_[3]});
      for (int n = 0; n < concat_shape_[0]; ++n) {
        const T* src = g.data.data() + n * 2 * plane + plane;
        T* dst = gm.data.data() + n * plane;
        for (int64_t i = 0; i < plane; ++i) dst[i] = src[i];
      }
      wavegram->backward(gm);
    }
  }

  Tensor<T> tap_conv_block6_gem(const Tensor<T>& map, bool train) {
    return tap_gem.forward(map, train);
  }
  Tensor<T> tap_embedding(const Tensor<T>& map, bool train) {
    if (train) gap_in_shape_ = map.shape;
    return embed_fc.forward(nn::global_avgpool(map), train);
  }

  // Proxy pretraining head: [N, kNumProxyTags] logits via the embedding tap.
  Tensor<T> forward_pretrain(const Tensor<T>& spec, const Tensor<T>* wave, bool train) {
    Tensor<T> map = forward_map(spec, wave, train);
    Tensor<T> emb = tap_embedding(map, train);
    return head.forward(emb, train);
  }

  void backward_pretrain(const Tensor<T>& glogits) {
    Tensor<T> gemb = head.backward(glogits);
    Tensor<T> ggap = embed_fc.backward(gemb);
    Tensor<T> gmap(gap_in_shape_);
    nn::global_avgpool_backward(gap_in_shape_, ggap, &gmap);
    backward_map(gmap);
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    if (wavegram) wavegram->collect(prefix + ".wavegram", out);
    for (int i = 0; i < 6; ++i) {
      blocks[i].collect(prefix + ".block" + std::to_string(i + 1), out);
    }
    tap_gem.collect(prefix + ".gem", out);
    embed_fc.collect(prefix + ".embed", out);
    head.collect(prefix + ".head", out);
  }

  std::optional<WavegramFrontEnd<T>> wavegram;
  Block blocks[6];
  GemPoolLayer<T> tap_gem;
  LinearLayer<T> embed_fc;
  LinearLayer<T> head;

 private:
  std::vector<int> concat_shape_;
  std::vector<int> gap_in_shape_;
};

// ---------------------------------------------------------------------------
// Fusion head: one affine map over concat(embedding1, embedding2).

template <class T>
class FusionHead {
 public:
  FusionHead() = default;
  FusionHead(int in_dim, Rng rng) : fc(in_dim, 1, rng) {}

  int in_dim() const { return fc.w.dim(1); }

  // x: [N, in_dim] -> logits [N]
  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (x.dim(1) != in_dim()) throw DimMismatch("fusion: embedding dim mismatch");
    Tensor<T> y = fc.forward(x, train);
    y.shape = {x.dim(0)};
    return y;
  }
  void backward(const Tensor<T>& glogits) {
    Tensor<T> g2d = glogits;
    g2d.shape = {glogits.dim(0), 1};
    fc.backward(g2d);
  }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    fc.collect(prefix + ".fc", out);
  }

  LinearLayer<T> fc;
};

// ---------------------------------------------------------------------------
// Single-sample wrappers over the backbones (evaluation mode).

constexpr int kMinEffnetFrames = 32;

struct EffnetOut {
  double logit = 0.0;
  std::vector<double> embedding;
};

template <class T>
EffnetOut effnet_forward(MiniEffNetV2<T>& model, const LogMelSpectrogram& spec) {
  if (spec.mel_bins <= 0 || spec.n_frames <= 0) {
    throw InputTooSmall("effnet_forward: empty spectrogram");
  }
  const LogMelSpectrogram padded = repeat_pad_frames(spec, kMinEffnetFrames);
  Tensor<T> x = spec_to_tensor<T>(padded);
  auto out = model.forward(x, false);
  EffnetOut r;
  r.logit = static_cast<double>(out.logits.data[0]);
  r.embedding.assign(out.embedding.data.begin(), out.embedding.data.end());
  return r;
}

template <class T>
std::vector<double> cnn14_forward(MiniCnn14<T>& model, const LogMelSpectrogram& spec,
                                  const AudioClip* wave, Stage2Tap tap) {
  if (spec.mel_bins <= 0 || spec.n_frames <= 0) {
    throw InputTooSmall("cnn14_forward: empty spectrogram");
  }
  Tensor<T> spec_t = spec_to_tensor<T>(spec);
  std::optional<Tensor<T>> wave_t;
  if (wave) wave_t = clip_to_tensor<T>(*wave);
  Tensor<T> map = model.forward_map(spec_t, wave ? &*wave_t : nullptr, false);
  Tensor<T> e = (tap == Stage2Tap::kConvBlock6Gem) ? model.tap_conv_block6_gem(map, false)
                                                   : model.tap_embedding(map, false);
  return std::vector<double>(e.data.begin(), e.data.end());
}

template <class T>
double fuse_forward(FusionHead<T>& head, const std::vector<double>& e1,
                    const std::vector<double>& e2) {
  if (static_cast<int>(e1.size() + e2.size()) != head.in_dim()) {
    throw DimMismatch("fuse_forward: embedding dims do not match the head");
  }
  Tensor<T> x({1, head.in_dim()});
  size_t j = 0;
  for (double v : e1) x.data[j++] = static_cast<T>(v);
  for (double v : e2) x.data[j++] = static_cast<T>(v);
  Tensor<T> y = head.forward(x, false);
  return static_cast<double>(y.data[0]);
}

}  // namespace fcv

#endif  // FCV_MODELS_HPP_
