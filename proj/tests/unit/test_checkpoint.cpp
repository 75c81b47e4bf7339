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
#include "fcv/checkpoint.hpp"
#include "support/test_util.hpp"

using namespace fcv;

namespace {

bool same_bits(const Tensor<float>& a, const Tensor<float>& b) {
  return a.shape == b.shape &&
         std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("checkpoint: save/load round trip is bit-exact for every tensor") {
  CaseModel model(case_config(CaseId::kCase8k), 7);
  const auto bytes = serialize_case_model(model);
  CaseModel back = load_case_model_bytes(bytes);
  auto a = model.params();
  auto b = back.params();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(same_bits(*a[i].tensor, *b[i].tensor));
  }
  CHECK(back.cfg.id == CaseId::kCase8k);
  CHECK(back.seed == 7);
}

TEST_CASE("checkpoint: 100 round trips stay bit-exact") {
  CaseModel model(case_config(CaseId::kCase4k), 99);
  auto bytes = serialize_case_model(model);
  const auto original = bytes;
  for (int i = 0; i < 100; ++i) {
    CaseModel m = load_case_model_bytes(bytes);
    bytes = serialize_case_model(m);
    CHECK(bytes == original);
  }
}

TEST_CASE("checkpoint: any single flipped byte is detected") {
  CaseModel model(case_config(CaseId::kCase8k), 3);
  const auto bytes = serialize_case_model(model);
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    auto corrupt = bytes;
    const size_t pos = static_cast<size_t>(rng.below(corrupt.size()));
    uint8_t flip = static_cast<uint8_t>(rng.uniform_int(1, 255));
    corrupt[pos] ^= flip;
    CHECK_THROWS_AS(load_case_model_bytes(corrupt), CrcMismatch);
  }
}

TEST_CASE("checkpoint: wrong magic raises BadMagic once the CRC is consistent") {
  CaseModel model(case_config(CaseId::kCase8k), 3);
  auto bytes = serialize_case_model(model);
  bytes[0] = 'X';
  // Re-seal so only the magic is wrong.
  const uint32_t crc = crc32(bytes.data(), bytes.size() - 4);
  for (int i = 0; i < 4; ++i) {
    bytes[bytes.size() - 4 + static_cast<size_t>(i)] =
        static_cast<uint8_t>((crc >> (8 * i)) & 0xff);
  }
  CHECK_THROWS_AS(load_case_model_bytes(bytes), BadMagic);
}

TEST_CASE("checkpoint: version 999 raises VersionUnsupported") {
  CaseModel model(case_config(CaseId::kCase8k), 3);
  auto bytes = serialize_case_model(model);
  bytes[4] = 999 & 0xff;
  bytes[5] = 999 >> 8;
  const uint32_t crc = crc32(bytes.data(), bytes.size() - 4);
  for (int i = 0; i < 4; ++i) {
    bytes[bytes.size() - 4 + static_cast<size_t>(i)] =
        static_cast<uint8_t>((crc >> (8 * i)) & 0xff);
  }
  CHECK_THROWS_AS(load_case_model_bytes(bytes), VersionUnsupported);
}

TEST_CASE("checkpoint: truncated and oversized files are rejected") {
  CHECK_THROWS_AS(load_case_model_bytes(std::vector<uint8_t>{1, 2, 3}), MalformedContainer);
}

TEST_CASE("checkpoint: config keys are exactly the documented set") {
  const auto j = case_model_config(case_config(CaseId::kCase4k), 42);
  CHECK(j.size() == 7);
  CHECK(j.at("case") == "CASE_4K");
  CHECK(j.at("mel_bins_stage1") == 256);
  CHECK(j.at("mel_bins_stage2") == 128);
  CHECK(j.at("tap") == "conv_block6_gem");
  CHECK(j.at("embedding_dims") == nlohmann::json({64, 128}));
  CHECK(j.at("seed") == 42);
  CHECK(j.at("format_version") == 1);
}

TEST_CASE("checkpoint: explicit little-endian encode round-trips exact floats") {
  // Hand-parse one tensor record to pin the wire layout.
  CaseModel model(case_config(CaseId::kCase8k), 5);
  const auto bytes = serialize_case_model(model);
  REQUIRE(bytes.size() > 16);
  CHECK(bytes[0] == 'F');
  CHECK(bytes[1] == 'C');
  CHECK(bytes[2] == 'V');
  CHECK(bytes[3] == '1');
  const uint32_t version = static_cast<uint32_t>(bytes[4]) | bytes[5] << 8 | bytes[6] << 16 |
                           static_cast<uint32_t>(bytes[7]) << 24;
  CHECK(version == kCheckpointVersion);
  const uint32_t cfg_len = static_cast<uint32_t>(bytes[8]) | bytes[9] << 8 | bytes[10] << 16 |
                           static_cast<uint32_t>(bytes[11]) << 24;
  size_t pos = 12 + cfg_len;
  const uint16_t name_len = static_cast<uint16_t>(bytes[pos] | bytes[pos + 1] << 8);
  const std::string name(reinterpret_cast<const char*>(bytes.data() + pos + 2), name_len);
  CHECK(name == model.params()[0].name);
}

TEST_CASE("cnn14-only checkpoints round trip and validate the architecture") {
  MiniCnn14<float> model(false, Rng(21));
  const CaseConfig& cfg = case_config(CaseId::kCase8k);
  const auto bytes = serialize_cnn14_only(model, cfg, 11);
  MiniCnn14<float> back = load_cnn14_only_bytes(bytes, cfg);
  std::vector<ParamRef<float>> a, b;
  model.collect("cnn14", a);
  back.collect("cnn14", b);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(same_bits(*a[i].tensor, *b[i].tensor));
  // Wrong architecture is refused.
  CHECK_THROWS_AS(load_cnn14_only_bytes(bytes, case_config(CaseId::kCase48k)),
                  TensorShapeMismatch);
}

TEST_CASE("feature dump: record + CRC round trip") {
  LogMelSpectrogram spec;
  spec.mel_bins = 3;
  spec.n_frames = 4;
  spec.values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  auto bytes = serialize_feature_dump(spec);
  const FeatureDump dump = parse_feature_dump(bytes);
  CHECK(dump.name == "logmel");
  CHECK(dump.shape == std::vector<int>{3, 4});
  CHECK(dump.values.size() == 12);
  CHECK(dump.values[5] == 6.0f);
  bytes[10] ^= 0x40;
  CHECK_THROWS_AS(parse_feature_dump(bytes), CrcMismatch);
}
