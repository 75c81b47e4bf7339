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

#include "fcv/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

namespace fcv {

namespace {

// Seed-stream tags, one per purpose.
constexpr uint64_t kTagPretrain = 0xA2C4;
constexpr uint64_t kTagStage1 = 0x51A6;
constexpr uint64_t kTagFusion = 0xF051;
constexpr uint64_t kTagShuffleLabels = 0x5FFF;

std::vector<uint8_t> wav_bytes_of(const ManifestRow& row) {
  return read_file(row.path);
}

struct ArchKey {
  int rate;
  int mel_bins;
  bool wavegram;
  bool operator<(const ArchKey& o) const {
    return std::tie(rate, mel_bins, wavegram) < std::tie(o.rate, o.mel_bins, o.wavegram);
  }
};

ArchKey arch_of(const CaseConfig& cfg) {
  return ArchKey{cfg.stage2_rate, cfg.stage2_mel_bins, cfg.stage2_wavegram};
}

}  // namespace

int effective_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int n, int max_threads, const std::function<void(int, int)>& fn) {
  const int workers = std::max(1, std::min(max_threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i, w);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

AudioClip repeat_pad_min_duration(const AudioClip& clip, double min_seconds) {
  if (clip.samples.empty()) throw ClipTooShort("repeat_pad: empty clip");
  const size_t want = static_cast<size_t>(std::ceil(min_seconds * clip.sample_rate));
  if (clip.samples.size() >= want) return clip;
  AudioClip out = clip;
  out.samples.resize(want);
  for (size_t i = clip.samples.size(); i < want; ++i) {
    out.samples[i] = clip.samples[i % clip.samples.size()];
  }
  return out;
}

LogMelSpectrogram featurize_stage1(const AudioClip& clip, const CaseConfig& cfg) {
  const AudioClip at_rate = resample(clip, cfg.stage1_rate);
  return log_mel(at_rate, cfg.stage1_mel_bins, default_stft_for_rate(cfg.stage1_rate));
}

Stage2Input featurize_stage2(const AudioClip& clip, const CaseConfig& cfg) {
  Stage2Input out;
  AudioClip at_rate = resample(clip, cfg.stage2_rate);
  out.spec = log_mel(at_rate, cfg.stage2_mel_bins, default_stft_for_rate(cfg.stage2_rate));
  if (cfg.stage2_wavegram) out.wave = std::move(at_rate);
  return out;
}

Tensor<float> assemble_batch(const std::vector<LogMelSpectrogram>& specs,
                             const std::vector<int>& rows,
                             const SpecAugmentPolicy* augment, Rng* aug_rng,
                             int min_frames) {
  if (rows.empty()) throw EmptyTrainSet("assemble_batch: no rows");
  const int mel = specs[static_cast<size_t>(rows[0])].mel_bins;
  int frames = min_frames;
  for (int r : rows) {
    if (specs[static_cast<size_t>(r)].mel_bins != mel) {
      throw ShapeMismatch("assemble_batch: inconsistent mel bins");
    }
    frames = std::max(frames, specs[static_cast<size_t>(r)].n_frames);
  }
  Tensor<float> x({static_cast<int>(rows.size()), 1, mel, frames});
  for (size_t b = 0; b < rows.size(); ++b) {
    LogMelSpectrogram padded = repeat_pad_frames(specs[static_cast<size_t>(rows[b])], frames);
    if (augment && aug_rng) spec_augment_inplace(padded, *augment, *aug_rng);
    float* dst = x.data.data() + static_cast<int64_t>(b) * mel * frames;
    for (size_t i = 0; i < padded.values.size(); ++i) dst[i] = static_cast<float>(padded.values[i]);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Proxy pretraining.

namespace {

struct ProxyFeatures {
  std::vector<LogMelSpectrogram> specs;
  std::vector<std::array<int, kNumProxyTags>> tags;
  std::vector<AudioClip> waves;  // empty unless the arch needs them
};

Tensor<float> proxy_spec_batch(const ProxyFeatures& f, const std::vector<int>& rows) {
  return assemble_batch(f.specs, rows, nullptr, nullptr, 1);
}

Tensor<float> proxy_wave_batch(const ProxyFeatures& f, const std::vector<int>& rows) {
  const int len = static_cast<int>(f.waves[static_cast<size_t>(rows[0])].samples.size());
  Tensor<float> x({static_cast<int>(rows.size()), 1, len});
  for (size_t b = 0; b < rows.size(); ++b) {
    const auto& s = f.waves[static_cast<size_t>(rows[b])].samples;
    if (static_cast<int>(s.size()) != len) throw ShapeMismatch("proxy waves differ in length");
    float* dst = x.data.data() + static_cast<int64_t>(b) * len;
    for (size_t i = 0; i < s.size(); ++i) dst[i] = static_cast<float>(s[i]);
  }
  return x;
}

Tensor<float> proxy_targets(const ProxyFeatures& f, const std::vector<int>& rows) {
  Tensor<float> y({static_cast<int>(rows.size()), kNumProxyTags});
  for (size_t b = 0; b < rows.size(); ++b) {
    for (int t = 0; t < kNumProxyTags; ++t) {
      y.data[b * kNumProxyTags + static_cast<size_t>(t)] =
          static_cast<float>(f.tags[static_cast<size_t>(rows[b])][static_cast<size_t>(t)]);
    }
  }
  return y;
}

double proxy_eval_auc(MiniCnn14<float>& model, const ProxyFeatures& f,
                      const std::vector<int>& eval_rows, bool wavegram, int batch) {
  std::vector<std::vector<double>> logits(eval_rows.size());
  for (size_t start = 0; start < eval_rows.size(); start += static_cast<size_t>(batch)) {
    std::vector<int> rows(eval_rows.begin() + static_cast<long>(start),
                          eval_rows.begin() +
                              static_cast<long>(std::min(start + batch, eval_rows.size())));
    Tensor<float> xs = proxy_spec_batch(f, rows);
    std::optional<Tensor<float>> xw;
    if (wavegram) xw = proxy_wave_batch(f, rows);
    Tensor<float> out = model.forward_pretrain(xs, wavegram ? &*xw : nullptr, false);
    for (size_t b = 0; b < rows.size(); ++b) {
      logits[start + b].assign(out.data.begin() + static_cast<long>(b * kNumProxyTags),
                               out.data.begin() + static_cast<long>((b + 1) * kNumProxyTags));
    }
  }
  double sum = 0.0;
  int used = 0;
  for (int t = 0; t < kNumProxyTags; ++t) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (size_t i = 0; i < eval_rows.size(); ++i) {
      scores.push_back(logits[i][static_cast<size_t>(t)]);
      labels.push_back(f.tags[static_cast<size_t>(eval_rows[i])][static_cast<size_t>(t)]);
    }
    const int pos = std::count(labels.begin(), labels.end(), 1);
    if (pos == 0 || pos == static_cast<int>(labels.size())) continue;  // degenerate tag
    sum += auc(scores, labels);
    ++used;
  }
  if (used == 0) throw SingleClass("proxy_eval_auc: every tag degenerate");
  return sum / used;
}

}  // namespace

PretrainResult pretrain_proxy(const CaseConfig& cfg, const PipelineConfig& pcfg) {
  const PretrainConfig& pc = pcfg.pretrain;
  Rng root =
      Rng(pcfg.train.seed)
          .fork(kTagPretrain,
                static_cast<uint64_t>(cfg.stage2_rate) * 2 + (cfg.stage2_wavegram ? 1 : 0));

  const auto corpus =
      generate_proxy_corpus(cfg.stage2_rate, pc.clips, pc.clip_seconds, root.fork(0).seed());

  ProxyFeatures feats;
  feats.specs.resize(corpus.size());
  feats.tags.resize(corpus.size());
  if (cfg.stage2_wavegram) feats.waves.resize(corpus.size());
  const StftConfig stft_cfg = default_stft_for_rate(cfg.stage2_rate);
  for (size_t i = 0; i < corpus.size(); ++i) {
    feats.specs[i] = log_mel(corpus[i].clip, cfg.stage2_mel_bins, stft_cfg);
    feats.tags[i] = corpus[i].tags;
    if (cfg.stage2_wavegram) feats.waves[i] = corpus[i].clip;
  }

  std::vector<int> order(corpus.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng split_rng = root.fork(1);
  split_rng.shuffle(order);
  const int n_train = static_cast<int>(std::lround(pc.train_fraction * corpus.size()));
  std::vector<int> train_rows(order.begin(), order.begin() + n_train);
  std::vector<int> eval_rows(order.begin() + n_train, order.end());

  MiniCnn14<float> model(cfg.stage2_wavegram, root.fork(2));
  const double auc_before =
      proxy_eval_auc(model, feats, eval_rows, cfg.stage2_wavegram, pcfg.train.batch_size);

  nn::AdamOptimizer<float> opt;
  std::vector<ParamRef<float>> refs;
  model.collect("cnn14", refs);
  opt.add_params(trainable_of(refs));

  nn::TrainConfig tc = pcfg.train;
  tc.epochs = pc.epochs;
  Rng shuffle_rng = root.fork(3);
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const double lr = nn::cosine_lr(epoch, tc);
    std::vector<int> epoch_order = train_rows;
    shuffle_rng.shuffle(epoch_order);
    for (size_t start = 0; start < epoch_order.size();
         start += static_cast<size_t>(tc.batch_size)) {
      std::vector<int> rows(
          epoch_order.begin() + static_cast<long>(start),
          epoch_order.begin() +
              static_cast<long>(std::min(start + tc.batch_size, epoch_order.size())));
      Tensor<float> xs = proxy_spec_batch(feats, rows);
      std::optional<Tensor<float>> xw;
      if (cfg.stage2_wavegram) xw = proxy_wave_batch(feats, rows);
      Tensor<float> targets = proxy_targets(feats, rows);
      opt.zero_grad();
      Tensor<float> logits =
          model.forward_pretrain(xs, cfg.stage2_wavegram ? &*xw : nullptr, true);
      Tensor<float> glogits(logits.shape);
      nn::bce_with_logits_backward(logits, targets, 1.0, &glogits);
      model.backward_pretrain(glogits);
      opt.step(lr);
    }
  }

  const double auc_after =
      proxy_eval_auc(model, feats, eval_rows, cfg.stage2_wavegram, pcfg.train.batch_size);

  // Round-trip through the wire format: drops layer caches and freezes the
  // exact bytes that a checkpoint would carry.
  const auto bytes = serialize_cnn14_only(model, cfg, pcfg.train.seed);
  PretrainResult result{load_cnn14_only_bytes(bytes, cfg), auc_before, auc_after};
  return result;
}

// ---------------------------------------------------------------------------
// Stage-1 and fusion training.

MiniEffNetV2<float> train_stage1(const std::vector<LogMelSpectrogram>& specs,
                                 const std::vector<int>& labels,
                                 const std::vector<int>& train_indices,
                                 const PipelineConfig& pcfg, Rng rng,
                                 std::vector<double>* epoch_losses) {
  if (train_indices.empty()) throw EmptyTrainSet("train_stage1: empty train set");
  MiniEffNetV2<float> model(rng.fork(0));
  nn::AdamOptimizer<float> opt;
  std::vector<ParamRef<float>> refs;
  model.collect("effnet", refs);
  opt.add_params(trainable_of(refs));

  Rng aug_rng = rng.fork(1);
  Rng shuffle_rng = rng.fork(2);
  const nn::TrainConfig& tc = pcfg.train;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const double lr = nn::cosine_lr(epoch, tc);
    std::vector<int> order = train_indices;
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int64_t loss_count = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(tc.batch_size)) {
      std::vector<int> rows(
          order.begin() + static_cast<long>(start),
          order.begin() + static_cast<long>(std::min(start + tc.batch_size, order.size())));
      Tensor<float> x = assemble_batch(specs, rows, &pcfg.augment, &aug_rng);
      Tensor<float> targets({static_cast<int>(rows.size())});
      for (size_t b = 0; b < rows.size(); ++b) {
        targets.data[b] = static_cast<float>(labels[static_cast<size_t>(rows[b])]);
      }
      opt.zero_grad();
      auto out = model.forward(x, true);
      const double loss = nn::bce_with_logits(out.logits, targets);
      loss_sum += loss * static_cast<double>(rows.size());
      loss_count += static_cast<int64_t>(rows.size());
      Tensor<float> glogits(out.logits.shape);
      nn::bce_with_logits_backward(out.logits, targets, 1.0, &glogits);
      model.backward(glogits);
      opt.step(lr);
    }
    if (epoch_losses) epoch_losses->push_back(loss_sum / static_cast<double>(loss_count));
  }
  return model;
}

std::vector<std::vector<double>> extract_embeddings_e1(
    MiniEffNetV2<float>& model, const std::vector<LogMelSpectrogram>& specs) {
  std::vector<std::vector<double>> out(specs.size());
  for (size_t i = 0; i < specs.size(); ++i) {
    out[i] = effnet_forward(model, specs[i]).embedding;
  }
  return out;
}

std::vector<std::vector<double>> extract_embeddings_e2(
    MiniCnn14<float>& model, const std::vector<Stage2Input>& inputs, Stage2Tap tap) {
  std::vector<std::vector<double>> out(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) {
    out[i] = cnn14_forward(model, inputs[i].spec,
                           inputs[i].wave ? &*inputs[i].wave : nullptr, tap);
  }
  return out;
}

FusionHead<float> train_fusion(const std::vector<std::vector<double>>& features,
                               const std::vector<int>& labels,
                               const std::vector<int>& train_indices,
                               const PipelineConfig& pcfg, Rng rng) {
  if (train_indices.empty()) throw EmptyTrainSet("train_fusion: empty train set");
  const size_t dim = features[static_cast<size_t>(train_indices[0])].size();
  for (int r : train_indices) {
    if (features[static_cast<size_t>(r)].size() != dim) {
      throw DimMismatch("train_fusion: inconsistent embedding dims");
    }
  }
  FusionHead<float> head(static_cast<int>(dim), rng.fork(0));
  nn::AdamOptimizer<float> opt;
  std::vector<ParamRef<float>> refs;
  head.collect("fusion", refs);
  opt.add_params(trainable_of(refs));

  Rng shuffle_rng = rng.fork(1);
  const nn::TrainConfig& tc = pcfg.train;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const double lr = nn::cosine_lr(epoch, tc);
    std::vector<int> order = train_indices;
    shuffle_rng.shuffle(order);
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(tc.batch_size)) {
      std::vector<int> rows(
          order.begin() + static_cast<long>(start),
          order.begin() + static_cast<long>(std::min(start + tc.batch_size, order.size())));
      Tensor<float> x({static_cast<int>(rows.size()), static_cast<int>(dim)});
      Tensor<float> targets({static_cast<int>(rows.size())});
      for (size_t b = 0; b < rows.size(); ++b) {
        const auto& f = features[static_cast<size_t>(rows[b])];
        for (size_t j = 0; j < dim; ++j) {
          x.data[b * dim + j] = static_cast<float>(f[j]);
        }
        targets.data[b] = static_cast<float>(labels[static_cast<size_t>(rows[b])]);
      }
      opt.zero_grad();
      Tensor<float> logits = head.forward(x, true);
      Tensor<float> glogits(logits.shape);
      nn::bce_with_logits_backward(logits, targets, 1.0, &glogits);
      head.backward(glogits);
      opt.step(lr);
    }
  }
  return head;
}

// ---------------------------------------------------------------------------
// Cross-validation.

namespace {

struct CaseData {
  const CaseConfig* cfg = nullptr;
  std::vector<int> manifest_rows;
  std::vector<std::string> uuids;
  std::vector<int> labels;
  std::vector<LogMelSpectrogram> spec1;
  std::vector<std::vector<double>> e2;
};

std::vector<double> concat_embedding(const std::vector<double>& e1,
                                     const std::vector<double>& e2) {
  std::vector<double> out;
  out.reserve(e1.size() + e2.size());
  out.insert(out.end(), e1.begin(), e1.end());
  out.insert(out.end(), e2.begin(), e2.end());
  return out;
}

uint32_t crc_of_bundle(const std::vector<uint8_t>& bytes) {
  // The container's own trailer is the CRC of everything before it.
  const size_t n = bytes.size();
  return static_cast<uint32_t>(bytes[n - 4]) | static_cast<uint32_t>(bytes[n - 3]) << 8 |
         static_cast<uint32_t>(bytes[n - 2]) << 16 | static_cast<uint32_t>(bytes[n - 1]) << 24;
}

}  // namespace

CvResult cross_validate(const DatasetManifest& manifest, const PipelineConfig& pcfg,
                        const CvOptions& opts) {
  const int threads = effective_threads(pcfg.threads);
  Rng root(pcfg.train.seed);

  // Route every row by its decoded sample rate.
  std::vector<int> row_rate(manifest.rows.size(), 0);
  parallel_for(static_cast<int>(manifest.rows.size()), threads, [&](int i, int) {
    const auto bytes = wav_bytes_of(manifest.rows[static_cast<size_t>(i)]);
    row_rate[static_cast<size_t>(i)] =
        decode_wav(bytes, manifest.rows[static_cast<size_t>(i)].uuid).sample_rate;
  });

  std::map<CaseId, CaseData> cases;
  for (size_t i = 0; i < manifest.rows.size(); ++i) {
    const CaseConfig& cfg = route(row_rate[i]);
    CaseData& cd = cases[cfg.id];
    cd.cfg = &cfg;
    cd.manifest_rows.push_back(static_cast<int>(i));
    cd.uuids.push_back(manifest.rows[i].uuid);
    cd.labels.push_back(manifest.rows[i].label);
  }

  // One pretrained stage-2 backbone per distinct architecture.
  std::map<ArchKey, const CaseConfig*> archs;
  for (auto& [id, cd] : cases) archs.emplace(arch_of(*cd.cfg), cd.cfg);
  std::vector<std::pair<ArchKey, const CaseConfig*>> arch_list(archs.begin(), archs.end());
  std::vector<PretrainResult> arch_models;
  arch_models.reserve(arch_list.size());
  for (auto& a : arch_list) arch_models.emplace_back();
  parallel_for(static_cast<int>(arch_list.size()), threads, [&](int i, int) {
    arch_models[static_cast<size_t>(i)] = pretrain_proxy(*arch_list[static_cast<size_t>(i)].second, pcfg);
  });
  const auto arch_model_of = [&](const CaseConfig& cfg) -> const PretrainResult& {
    for (size_t i = 0; i < arch_list.size(); ++i) {
      if (!(arch_list[i].first < arch_of(cfg)) && !(arch_of(cfg) < arch_list[i].first)) {
        return arch_models[i];
      }
    }
    throw Error("cross_validate: missing pretrained arch");
  };

  CvResult result;
  for (auto& [case_id, cd] : cases) {
    const CaseConfig& cfg = *cd.cfg;
    const PretrainResult& pretrained = arch_model_of(cfg);

    if (opts.shuffle_labels) {
      Rng srng = root.fork(kTagShuffleLabels, static_cast<uint64_t>(cfg.anchor_rate));
      srng.shuffle(cd.labels);
    }

    // Featurize and run the frozen stage-2 embedding once per row. Worker
    // threads own private copies of the frozen backbone.
    cd.spec1.resize(cd.manifest_rows.size());
    cd.e2.resize(cd.manifest_rows.size());
    {
      std::vector<MiniCnn14<float>> worker_models(static_cast<size_t>(threads),
                                                  pretrained.model);
      parallel_for(static_cast<int>(cd.manifest_rows.size()), threads, [&](int i, int w) {
        const ManifestRow& row =
            manifest.rows[static_cast<size_t>(cd.manifest_rows[static_cast<size_t>(i)])];
        const AudioClip clip = decode_wav(wav_bytes_of(row), row.uuid);
        const AudioClip padded = repeat_pad_min_duration(clip);
        cd.spec1[static_cast<size_t>(i)] = featurize_stage1(padded, cfg);
        Stage2Input s2 = featurize_stage2(padded, cfg);
        cd.e2[static_cast<size_t>(i)] =
            cnn14_forward(worker_models[static_cast<size_t>(w)], s2.spec,
                          s2.wave ? &*s2.wave : nullptr, cfg.stage2_tap);
      });
    }

    DatasetManifest sub;
    for (size_t i = 0; i < cd.manifest_rows.size(); ++i) {
      ManifestRow r = manifest.rows[static_cast<size_t>(cd.manifest_rows[i])];
      r.label = cd.labels[i];
      sub.rows.push_back(std::move(r));
    }
    const FoldPlan plan = kfold_split(sub, opts.k, pcfg.train.seed);

    CaseCvResult cres;
    cres.case_id = case_id;
    cres.plan = plan;
    cres.uuids = cd.uuids;
    cres.proxy_auc_before = pretrained.proxy_auc_before;
    cres.proxy_auc_after = pretrained.proxy_auc_after;
    cres.report.per_fold.resize(static_cast<size_t>(opts.k));
    cres.fold_checkpoint_crcs.resize(static_cast<size_t>(opts.k));
    std::vector<std::vector<Prediction>> fold_preds(static_cast<size_t>(opts.k));
    std::vector<std::vector<uint8_t>> fold_bundles(static_cast<size_t>(opts.k));

    parallel_for(opts.k, threads, [&](int fold, int) {
      const std::vector<int> train_idx = plan.train_indices(fold);
      const std::vector<int> eval_idx = plan.eval_indices(fold);
      const uint64_t fold_tag =
          static_cast<uint64_t>(cfg.anchor_rate) * 16 + static_cast<uint64_t>(fold);

      MiniEffNetV2<float> effnet = train_stage1(cd.spec1, cd.labels, train_idx, pcfg,
                                                root.fork(kTagStage1, fold_tag));
      const std::vector<std::vector<double>> e1 = extract_embeddings_e1(effnet, cd.spec1);

      std::vector<std::vector<double>> fused(cd.spec1.size());
      for (size_t i = 0; i < fused.size(); ++i) fused[i] = concat_embedding(e1[i], cd.e2[i]);
      FusionHead<float> fusion =
          train_fusion(fused, cd.labels, train_idx, pcfg, root.fork(kTagFusion, fold_tag));

      std::vector<double> scores;
      std::vector<int> eval_labels;
      for (int i : eval_idx) {
        Tensor<float> x({1, static_cast<int>(fused[static_cast<size_t>(i)].size())});
        for (size_t j = 0; j < fused[static_cast<size_t>(i)].size(); ++j) {
          x.data[j] = static_cast<float>(fused[static_cast<size_t>(i)][j]);
        }
        const double prob = nn::sigmoid(fusion.forward(x, false).data[0]);
        scores.push_back(prob);
        eval_labels.push_back(cd.labels[static_cast<size_t>(i)]);
        Prediction p;
        p.uuid = cd.uuids[static_cast<size_t>(i)];
        p.probability = prob;
        p.case_id = case_id;
        p.fold = fold;
        p.label = cd.labels[static_cast<size_t>(i)];
        fold_preds[static_cast<size_t>(fold)].push_back(std::move(p));
      }
      cres.report.per_fold[static_cast<size_t>(fold)] = auc(scores, eval_labels);

      CaseModel bundle(cfg, pcfg.train.seed);
      bundle.effnet = std::move(effnet);
      bundle.cnn14 = pretrained.model;
      bundle.fusion = std::move(fusion);
      fold_bundles[static_cast<size_t>(fold)] = serialize_case_model(bundle);
      cres.fold_checkpoint_crcs[static_cast<size_t>(fold)] =
          crc_of_bundle(fold_bundles[static_cast<size_t>(fold)]);
    });

    for (auto& preds : fold_preds) {
      cres.predictions.insert(cres.predictions.end(), preds.begin(), preds.end());
    }
    cres.report =
        summarize_folds(cres.report.per_fold, static_cast<int>(cd.manifest_rows.size()));
    if (opts.keep_fold0_bundle) cres.fold0_bundle = std::move(fold_bundles[0]);
    result.cases.push_back(std::move(cres));
  }

  // Pooled report: fold f gathers the fold-f hold-out predictions of every
  // case.
  std::vector<double> pooled_per_fold;
  int total_rows = 0;
  for (const auto& c : result.cases) total_rows += c.report.n;
  for (int fold = 0; fold < opts.k; ++fold) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& c : result.cases) {
      for (const auto& p : c.predictions) {
        if (p.fold == fold) {
          scores.push_back(p.probability);
          labels.push_back(p.label);
        }
      }
    }
    pooled_per_fold.push_back(auc(scores, labels));
  }
  result.pooled = summarize_folds(pooled_per_fold, total_rows);
  return result;
}

// ---------------------------------------------------------------------------

CaseModel train_full(const DatasetManifest& manifest, const PipelineConfig& pcfg,
                     MiniCnn14<float>* pretrained, double* train_auc) {
  if (manifest.rows.empty()) throw EmptyTrainSet("train_full: empty manifest");
  const int threads = effective_threads(pcfg.threads);
  Rng root(pcfg.train.seed);

  std::vector<int> row_rate(manifest.rows.size(), 0);
  parallel_for(static_cast<int>(manifest.rows.size()), threads, [&](int i, int) {
    row_rate[static_cast<size_t>(i)] =
        decode_wav(wav_bytes_of(manifest.rows[static_cast<size_t>(i)])).sample_rate;
  });
  const CaseConfig& cfg = route(row_rate[0]);
  for (int r : row_rate) {
    if (route(r).id != cfg.id) {
      throw Error("train_full: manifest routes to multiple cases; split it first");
    }
  }

  std::optional<PretrainResult> own;
  MiniCnn14<float>* cnn14 = pretrained;
  if (!cnn14) {
    own = pretrain_proxy(cfg, pcfg);
    cnn14 = &own->model;
  }

  std::vector<LogMelSpectrogram> spec1(manifest.rows.size());
  std::vector<std::vector<double>> e2(manifest.rows.size());
  std::vector<int> labels(manifest.rows.size());
  {
    std::vector<MiniCnn14<float>> worker_models(static_cast<size_t>(threads), *cnn14);
    parallel_for(static_cast<int>(manifest.rows.size()), threads, [&](int i, int w) {
      const ManifestRow& row = manifest.rows[static_cast<size_t>(i)];
      labels[static_cast<size_t>(i)] = row.label;
      const AudioClip padded = repeat_pad_min_duration(decode_wav(wav_bytes_of(row), row.uuid));
      spec1[static_cast<size_t>(i)] = featurize_stage1(padded, cfg);
      Stage2Input s2 = featurize_stage2(padded, cfg);
      e2[static_cast<size_t>(i)] = cnn14_forward(worker_models[static_cast<size_t>(w)], s2.spec,
                                                 s2.wave ? &*s2.wave : nullptr, cfg.stage2_tap);
    });
  }

  std::vector<int> all(manifest.rows.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  MiniEffNetV2<float> effnet = train_stage1(
      spec1, labels, all, pcfg,
      root.fork(kTagStage1, static_cast<uint64_t>(cfg.anchor_rate) * 16 + 15));
  const std::vector<std::vector<double>> e1 = extract_embeddings_e1(effnet, spec1);
  std::vector<std::vector<double>> fused(all.size());
  for (size_t i = 0; i < fused.size(); ++i) fused[i] = concat_embedding(e1[i], e2[i]);
  FusionHead<float> fusion = train_fusion(
      fused, labels, all, pcfg,
      root.fork(kTagFusion, static_cast<uint64_t>(cfg.anchor_rate) * 16 + 15));

  if (train_auc) {
    std::vector<double> scores;
    for (size_t i = 0; i < fused.size(); ++i) {
      Tensor<float> x({1, static_cast<int>(fused[i].size())});
      for (size_t j = 0; j < fused[i].size(); ++j) x.data[j] = static_cast<float>(fused[i][j]);
      scores.push_back(nn::sigmoid(fusion.forward(x, false).data[0]));
    }
    *train_auc = auc(scores, labels);
  }

  CaseModel model(cfg, pcfg.train.seed);
  model.effnet = std::move(effnet);
  model.cnn14 = *cnn14;
  model.fusion = std::move(fusion);
  return model;
}

ScoreResult score_clip(CaseModel& model, const AudioClip& clip) {
  const AudioClip padded = repeat_pad_min_duration(clip);
  const CaseConfig& cfg = model.cfg;
  const LogMelSpectrogram s1 = featurize_stage1(padded, cfg);
  const std::vector<double> e1 = effnet_forward(model.effnet, s1).embedding;
  Stage2Input s2 = featurize_stage2(padded, cfg);
  const std::vector<double> e2 = cnn14_forward(
      model.cnn14, s2.spec, s2.wave ? &*s2.wave : nullptr, cfg.stage2_tap);
  const double logit = fuse_forward(model.fusion, e1, e2);
  return ScoreResult{nn::sigmoid(logit), cfg.id};
}

}  // namespace fcv
