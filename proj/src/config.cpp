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

#include "fcv/config.hpp"

#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"

namespace fcv {

namespace {

using nlohmann::json;

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* section) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(std::string("config: unknown key '") + key + "' in " + section);
  }
}

}  // namespace

void apply_config_json(PipelineConfig& cfg, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("config: bad JSON: ") + e.what());
  }
  check_keys(j, {"train", "augment", "pretrain", "corpus", "threads"}, "root");
  if (j.contains("train")) {
    const json& t = j["train"];
    check_keys(t, {"lr_max", "lr_min", "batch_size", "epochs", "seed"}, "train");
    take(t, "lr_max", cfg.train.lr_max);
    take(t, "lr_min", cfg.train.lr_min);
    take(t, "batch_size", cfg.train.batch_size);
    take(t, "epochs", cfg.train.epochs);
    take(t, "seed", cfg.train.seed);
  }
  if (j.contains("augment")) {
    const json& a = j["augment"];
    check_keys(a, {"num_freq_masks", "max_freq_width", "num_time_masks", "max_time_width",
                   "fill"},
               "augment");
    take(a, "num_freq_masks", cfg.augment.num_freq_masks);
    take(a, "max_freq_width", cfg.augment.max_freq_width);
    take(a, "num_time_masks", cfg.augment.num_time_masks);
    take(a, "max_time_width", cfg.augment.max_time_width);
    take(a, "fill", cfg.augment.fill);
  }
  if (j.contains("pretrain")) {
    const json& p = j["pretrain"];
    check_keys(p, {"clips", "epochs", "train_fraction", "clip_seconds"}, "pretrain");
    take(p, "clips", cfg.pretrain.clips);
    take(p, "epochs", cfg.pretrain.epochs);
    take(p, "train_fraction", cfg.pretrain.train_fraction);
    take(p, "clip_seconds", cfg.pretrain.clip_seconds);
  }
  if (j.contains("corpus")) {
    const json& c = j["corpus"];
    check_keys(c, {"clips_per_case", "min_seconds", "max_seconds", "pos_band_lo",
                   "pos_band_hi", "neg_band_lo", "neg_band_hi", "min_gain", "max_gain"},
               "corpus");
    take(c, "clips_per_case", cfg.corpus.clips_per_case);
    take(c, "min_seconds", cfg.corpus.min_seconds);
    take(c, "max_seconds", cfg.corpus.max_seconds);
    take(c, "pos_band_lo", cfg.corpus.pos_band_lo);
    take(c, "pos_band_hi", cfg.corpus.pos_band_hi);
    take(c, "neg_band_lo", cfg.corpus.neg_band_lo);
    take(c, "neg_band_hi", cfg.corpus.neg_band_hi);
    take(c, "min_gain", cfg.corpus.min_gain);
    take(c, "max_gain", cfg.corpus.max_gain);
  }
  take(j, "threads", cfg.threads);
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  PipelineConfig cfg;
  apply_config_json(cfg, ss.str());
  return cfg;
}

}  // namespace fcv
