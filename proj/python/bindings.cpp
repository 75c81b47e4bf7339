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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fcv/config.hpp"
#include "fcv/service.hpp"

namespace py = pybind11;

namespace {

fcv::AudioClip clip_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> samples,
                               int sample_rate) {
  fcv::AudioClip clip;
  clip.sample_rate = sample_rate;
  const auto r = samples.unchecked<1>();
  clip.samples.resize(static_cast<size_t>(r.shape(0)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) clip.samples[static_cast<size_t>(i)] = r(i);
  return clip;
}

py::array_t<double> array_from_clip(const fcv::AudioClip& clip) {
  py::array_t<double> out(static_cast<py::ssize_t>(clip.samples.size()));
  auto w = out.mutable_unchecked<1>();
  for (size_t i = 0; i < clip.samples.size(); ++i) w(static_cast<py::ssize_t>(i)) = clip.samples[i];
  return out;
}

py::array_t<double> array_from_spec(const fcv::LogMelSpectrogram& spec) {
  py::array_t<double> out({spec.mel_bins, spec.n_frames});
  auto w = out.mutable_unchecked<2>();
  for (int m = 0; m < spec.mel_bins; ++m) {
    for (int t = 0; t < spec.n_frames; ++t) w(m, t) = spec.at(m, t);
  }
  return out;
}

fcv::LogMelSpectrogram spec_from_array(
    py::array_t<double, py::array::c_style | py::array::forcecast> values, int source_rate,
    double frame_rate) {
  const auto r = values.unchecked<2>();
  fcv::LogMelSpectrogram spec;
  spec.mel_bins = static_cast<int>(r.shape(0));
  spec.n_frames = static_cast<int>(r.shape(1));
  spec.source_rate = source_rate;
  spec.frame_rate = frame_rate;
  spec.values.resize(static_cast<size_t>(spec.mel_bins) * spec.n_frames);
  for (int m = 0; m < spec.mel_bins; ++m) {
    for (int t = 0; t < spec.n_frames; ++t) spec.at(m, t) = r(m, t);
  }
  return spec;
}

py::dict dict_of_case(const fcv::CaseConfig& cfg) {
  py::dict d;
  d["case"] = fcv::to_string(cfg.id);
  d["stage1_rate"] = cfg.stage1_rate;
  d["stage1_mel_bins"] = cfg.stage1_mel_bins;
  d["stage2_rate"] = cfg.stage2_rate;
  d["stage2_mel_bins"] = cfg.stage2_mel_bins;
  d["stage2_tap"] = fcv::to_string(cfg.stage2_tap);
  d["stage2_wavegram"] = cfg.stage2_wavegram;
  return d;
}

fcv::PipelineConfig config_from_kwargs(uint64_t seed, int epochs, int pretrain_clips,
                                       int pretrain_epochs, int clips_per_case, int threads) {
  fcv::PipelineConfig cfg;
  cfg.train.seed = seed;
  if (epochs > 0) cfg.train.epochs = epochs;
  if (pretrain_clips > 0) cfg.pretrain.clips = pretrain_clips;
  if (pretrain_epochs > 0) cfg.pretrain.epochs = pretrain_epochs;
  if (clips_per_case > 0) cfg.corpus.clips_per_case = clips_per_case;
  cfg.threads = threads;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_fcv, m) {
  m.doc() = "Two-stage cough-sound screening pipeline (native core)";

  py::register_exception<fcv::Error>(m, "FcvError");

  m.def("routes_table", &fcv::routes_table_text, "The routing table as printed by the CLI");

  m.def(
      "route",
      [](int sample_rate) { return dict_of_case(fcv::route(sample_rate)); },
      py::arg("sample_rate"));

  m.def(
      "decode_wav",
      [](py::bytes data) {
        const std::string_view view = data;
        const fcv::AudioClip clip = fcv::decode_wav(
            std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(view.data()), view.size()));
        return py::make_tuple(array_from_clip(clip), clip.sample_rate);
      },
      py::arg("data"), "Decode WAV bytes to (samples, sample_rate)");

  m.def(
      "encode_wav",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> samples, int rate) {
        const auto bytes = fcv::encode_wav_pcm16(clip_from_array(samples, rate));
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("samples"), py::arg("sample_rate"), "Encode mono samples as 16-bit PCM WAV");

  m.def(
      "resample",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> samples, int rate,
         int target_rate) {
        const fcv::AudioClip out = fcv::resample(clip_from_array(samples, rate), target_rate);
        return array_from_clip(out);
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("target_rate"));

  m.def("hz_to_mel", &fcv::hz_to_mel, py::arg("hz"));
  m.def("mel_to_hz", &fcv::mel_to_hz, py::arg("mel"));

  m.def(
      "log_mel",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> samples, int rate,
         int n_mels, int n_fft, int hop) {
        fcv::StftConfig cfg = fcv::default_stft_for_rate(rate);
        if (n_fft > 0) cfg.n_fft = n_fft;
        if (hop > 0) cfg.hop = hop;
        return array_from_spec(fcv::log_mel(clip_from_array(samples, rate), n_mels, cfg));
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("n_mels"), py::arg("n_fft") = 0,
      py::arg("hop") = 0);

  m.def(
      "spec_augment",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> values, uint64_t seed,
         int num_freq_masks, int max_freq_width, int num_time_masks, int max_time_width,
         double fill) {
        fcv::SpecAugmentPolicy policy{num_freq_masks, max_freq_width, num_time_masks,
                                      max_time_width, fill};
        fcv::Rng rng(seed);
        fcv::LogMelSpectrogram spec = spec_from_array(values, 0, 0.0);
        fcv::spec_augment_inplace(spec, policy, rng);
        return array_from_spec(spec);
      },
      py::arg("values"), py::arg("seed"), py::arg("num_freq_masks") = 2,
      py::arg("max_freq_width") = 16, py::arg("num_time_masks") = 2,
      py::arg("max_time_width") = 24, py::arg("fill") = fcv::kLogMelFloorDb);

  m.def(
      "auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        return fcv::auc(scores, labels);
      },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "kfold_split",
      [](const std::vector<int>& labels, int k, uint64_t seed) {
        fcv::DatasetManifest manifest;
        for (size_t i = 0; i < labels.size(); ++i) {
          fcv::ManifestRow row;
          row.uuid = std::to_string(i);
          row.path = "";
          row.label = labels[i];
          manifest.rows.push_back(std::move(row));
        }
        return fcv::kfold_split(manifest, k, seed).fold_of;
      },
      py::arg("labels"), py::arg("k") = 5, py::arg("seed") = 42,
      "Stratified fold index per row");

  m.def(
      "gem_pool",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> values, double p) {
        const auto r = values.unchecked<2>();
        fcv::Tensor<double> x({1, 1, static_cast<int>(r.shape(0)), static_cast<int>(r.shape(1))});
        for (py::ssize_t i = 0; i < r.shape(0); ++i) {
          for (py::ssize_t j = 0; j < r.shape(1); ++j) {
            x.data[static_cast<size_t>(i * r.shape(1) + j)] = r(i, j);
          }
        }
        return fcv::nn::gem_pool<double>(x, p, nullptr).data[0];
      },
      py::arg("values"), py::arg("p") = 3.0, "Generalized-mean pool of a 2-d map");

  m.def(
      "gen_synthetic",
      [](const std::filesystem::path& out_dir, int clips_per_case, uint64_t seed) {
        fcv::CorpusSpec spec;
        if (clips_per_case > 0) spec.clips_per_case = clips_per_case;
        const fcv::DatasetManifest manifest = fcv::generate_corpus(spec, seed, out_dir);
        return manifest.rows.size();
      },
      py::arg("out_dir"), py::arg("clips_per_case") = 0, py::arg("seed") = 42);

  m.def(
      "train",
      [](const std::filesystem::path& manifest_path, const std::filesystem::path& out,
         uint64_t seed, int epochs, int pretrain_clips, int pretrain_epochs, int threads) {
        const fcv::PipelineConfig cfg =
            config_from_kwargs(seed, epochs, pretrain_clips, pretrain_epochs, 0, threads);
        const fcv::DatasetManifest manifest = fcv::DatasetManifest::load_csv(manifest_path);
        double train_auc = 0.0;
        fcv::CaseModel model = fcv::train_full(manifest, cfg, nullptr, &train_auc);
        fcv::save_case_model(model, out);
        py::dict d;
        d["case"] = fcv::to_string(model.cfg.id);
        d["train_auc"] = train_auc;
        return d;
      },
      py::arg("manifest"), py::arg("out"), py::arg("seed") = 42, py::arg("epochs") = 0,
      py::arg("pretrain_clips") = 0, py::arg("pretrain_epochs") = 0, py::arg("threads") = 0,
      "Train a single-case bundle and write the checkpoint");

  m.def(
      "cross_validate",
      [](const std::filesystem::path& manifest_path, uint64_t seed, int epochs,
         int pretrain_clips, int pretrain_epochs, int threads, bool shuffle_labels) {
        const fcv::PipelineConfig cfg =
            config_from_kwargs(seed, epochs, pretrain_clips, pretrain_epochs, 0, threads);
        const fcv::DatasetManifest manifest = fcv::DatasetManifest::load_csv(manifest_path);
        fcv::CvOptions opts;
        opts.shuffle_labels = shuffle_labels;
        const fcv::CvResult result = fcv::cross_validate(manifest, cfg, opts);
        py::dict d;
        py::dict cases;
        for (const auto& c : result.cases) {
          py::dict cd;
          cd["per_fold"] = c.report.per_fold;
          cd["mean_auc"] = c.report.mean_auc;
          cd["std_auc"] = c.report.std_auc;
          cd["n"] = c.report.n;
          cd["proxy_auc"] = c.proxy_auc_after;
          cases[fcv::to_string(c.case_id)] = cd;
        }
        d["cases"] = cases;
        d["pooled_mean_auc"] = result.pooled.mean_auc;
        d["pooled_n"] = result.pooled.n;
        return d;
      },
      py::arg("manifest"), py::arg("seed") = 42, py::arg("epochs") = 0,
      py::arg("pretrain_clips") = 0, py::arg("pretrain_epochs") = 0, py::arg("threads") = 0,
      py::arg("shuffle_labels") = false);

  py::class_<fcv::ScoringService>(m, "Scorer")
      .def(py::init([](double threshold) {
             fcv::ServiceConfig cfg;
             cfg.threshold = threshold;
             return std::make_unique<fcv::ScoringService>(cfg);
           }),
           py::arg("threshold") = 0.5)
      .def("load_model",
           [](fcv::ScoringService& svc, const std::filesystem::path& path) {
             svc.load_model(path);
           })
      .def_property_readonly("model_count", &fcv::ScoringService::model_count)
      .def("score", [](const fcv::ScoringService& svc, py::bytes data) {
        const std::string_view view = data;
        const fcv::ScoreResponse resp = svc.score_bytes(std::span<const uint8_t>(
            reinterpret_cast<const uint8_t*>(view.data()), view.size()));
        py::dict d;
        d["probability"] = resp.probability;
        d["label"] = resp.label;
        d["case_id"] = resp.case_id;
        d["model_version"] = resp.model_version;
        d["latency_ms"] = resp.latency_ms;
        return d;
      });
}
