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
// Orchestration: routed featurization, proxy pretraining of the frozen
// stage-2 backbone, stage-1 training with SpecAugment, embedding fusion,
// stratified cross-validation and scoring.

#ifndef FCV_PIPELINE_HPP_
#define FCV_PIPELINE_HPP_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fcv/checkpoint.hpp"
#include "fcv/manifest.hpp"
#include "fcv/metrics.hpp"
#include "fcv/synth.hpp"

namespace fcv {

// Waveforms shorter than this are repeat-padded before featurization.
constexpr double kMinClipSeconds = 0.5;

struct PretrainConfig {
  int clips = 512;
  int epochs = 10;
  double train_fraction = 0.75;
  double clip_seconds = 0.5;
};

struct PipelineConfig {
  nn::TrainConfig train;      // batch 16, 30 epochs, cosine 1e-3 -> 1e-5
  SpecAugmentPolicy augment;  // stage-1 training only
  PretrainConfig pretrain;
  CorpusSpec corpus;
  int threads = 0;  // 0 = hardware concurrency
};

int effective_threads(int requested);
// Runs fn(index, worker) for index in [0, n) across up to max_threads
// workers. Results must be written to index-addressed slots.
void parallel_for(int n, int max_threads, const std::function<void(int, int)>& fn);

AudioClip repeat_pad_min_duration(const AudioClip& clip,
                                  double min_seconds = kMinClipSeconds);

LogMelSpectrogram featurize_stage1(const AudioClip& clip, const CaseConfig& cfg);

struct Stage2Input {
  LogMelSpectrogram spec;
  std::optional<AudioClip> wave;  // present iff the case uses the wavegram
};
Stage2Input featurize_stage2(const AudioClip& clip, const CaseConfig& cfg);

// Batch assembly for stage-1 training: cyclic pad every spectrogram to the
// batch's frame count (at least min_frames), optionally masking each copy.
Tensor<float> assemble_batch(const std::vector<LogMelSpectrogram>& specs,
                             const std::vector<int>& rows,
                             const SpecAugmentPolicy* augment, Rng* aug_rng,
                             int min_frames = kMinEffnetFrames);

// ---------------------------------------------------------------------------

struct PretrainResult {
  MiniCnn14<float> model;
  double proxy_auc_before = 0.0;
  double proxy_auc_after = 0.0;
};

// Pretrains a stage-2 backbone on the synthetic multi-tag proxy corpus and
// returns it ready to freeze. Deterministic in (cfg, pcfg).
PretrainResult pretrain_proxy(const CaseConfig& cfg, const PipelineConfig& pcfg);

MiniEffNetV2<float> train_stage1(const std::vector<LogMelSpectrogram>& specs,
                                 const std::vector<int>& labels,
                                 const std::vector<int>& train_indices,
                                 const PipelineConfig& pcfg, Rng rng,
                                 std::vector<double>* epoch_losses = nullptr);

// e1 for every row, evaluation mode, single-sample forwards.
std::vector<std::vector<double>> extract_embeddings_e1(
    MiniEffNetV2<float>& model, const std::vector<LogMelSpectrogram>& specs);

// e2 for every row under the frozen stage-2 backbone.
std::vector<std::vector<double>> extract_embeddings_e2(
    MiniCnn14<float>& model, const std::vector<Stage2Input>& inputs, Stage2Tap tap);

FusionHead<float> train_fusion(const std::vector<std::vector<double>>& features,
                               const std::vector<int>& labels,
                               const std::vector<int>& train_indices,
                               const PipelineConfig& pcfg, Rng rng);

// ---------------------------------------------------------------------------

struct Prediction {
  std::string uuid;
  double probability = 0.0;
  CaseId case_id = CaseId::kCase8k;
  int fold = -1;
  int label = -1;
};

struct CaseCvResult {
  CaseId case_id = CaseId::kCase8k;
  FoldPlan plan;
  std::vector<std::string> uuids;
  CvReport report;
  std::vector<Prediction> predictions;
  std::vector<uint32_t> fold_checkpoint_crcs;
  std::vector<uint8_t> fold0_bundle;  // populated when requested
  double proxy_auc_before = 0.0;
  double proxy_auc_after = 0.0;
};

struct CvResult {
  std::vector<CaseCvResult> cases;
  CvReport pooled;
};

struct CvOptions {
  int k = 5;
  bool shuffle_labels = false;
  bool keep_fold0_bundle = false;
};

CvResult cross_validate(const DatasetManifest& manifest, const PipelineConfig& pcfg,
                        const CvOptions& opts = {});

// Trains a servable bundle on every row of a single-case manifest. Supply a
// pretrained stage-2 backbone to reuse it, otherwise one is pretrained here.
CaseModel train_full(const DatasetManifest& manifest, const PipelineConfig& pcfg,
                     MiniCnn14<float>* pretrained = nullptr,
                     double* train_auc = nullptr);

struct ScoreResult {
  double probability = 0.0;
  CaseId case_id = CaseId::kCase8k;
};

ScoreResult score_clip(CaseModel& model, const AudioClip& clip);

}  // namespace fcv

#endif  // FCV_PIPELINE_HPP_
