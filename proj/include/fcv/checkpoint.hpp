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
// Checkpoint container: magic "FCV1", u32 LE format version, length-prefixed
// config JSON, self-delimiting tensor records (u16 name length, name bytes,
// u8 ndim, u32 dims, f32 LE row-major payload) and a trailing CRC32 over all
// preceding bytes. Byte order is explicit, so files are portable across
// hosts of any endianness.

#ifndef FCV_CHECKPOINT_HPP_
#define FCV_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fcv/models.hpp"
#include "nlohmann/json.hpp"

namespace fcv {

constexpr uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'F', 'C', 'V', '1'};

uint32_t crc32(const uint8_t* data, size_t len);

struct CheckpointData {
  uint32_t format_version = 0;
  nlohmann::json config;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  const Tensor<float>* find(const std::string& name) const;
};

std::vector<uint8_t> serialize_checkpoint(const nlohmann::json& config,
                                          const std::vector<ParamRef<float>>& refs);
CheckpointData parse_checkpoint(std::span<const uint8_t> bytes);

std::vector<uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const uint8_t> bytes);

// ---------------------------------------------------------------------------
// Full per-case bundle: stage-1 backbone, stage-2 backbone (with optional
// waveform front-end) and the fusion head.

struct CaseModel {
  CaseConfig cfg;
  uint64_t seed = 0;
  MiniEffNetV2<float> effnet;
  MiniCnn14<float> cnn14;
  FusionHead<float> fusion;

  CaseModel(const CaseConfig& config, uint64_t seed_value);
  std::vector<ParamRef<float>> params();
};

nlohmann::json case_model_config(const CaseConfig& cfg, uint64_t seed);
std::vector<uint8_t> serialize_case_model(CaseModel& model);
void save_case_model(CaseModel& model, const std::filesystem::path& path);
CaseModel load_case_model_bytes(std::span<const uint8_t> bytes);
CaseModel load_case_model(const std::filesystem::path& path);

// Stage-2-only checkpoints (proxy pretraining artifacts). The config carries
// the same key set as a full bundle; only cnn14.* tensors are present.
std::vector<uint8_t> serialize_cnn14_only(MiniCnn14<float>& model, const CaseConfig& cfg,
                                          uint64_t seed);
MiniCnn14<float> load_cnn14_only_bytes(std::span<const uint8_t> bytes, const CaseConfig& expect);

// Feature dumps reuse the checkpoint tensor record layout: one record named
// "logmel" followed by a CRC32 of the record bytes.
std::vector<uint8_t> serialize_feature_dump(const LogMelSpectrogram& spec);

struct FeatureDump {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;
};
FeatureDump parse_feature_dump(std::span<const uint8_t> bytes);

}  // namespace fcv

#endif  // FCV_CHECKPOINT_HPP_
