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

#include "fcv/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace fcv {

namespace {

const uint32_t* crc_table() {
  static const auto table = [] {
    static uint32_t t[256];
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  return table;
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<uint8_t>& out, float f) {
  uint32_t u;
  std::memcpy(&u, &f, 4);
  put_u32(out, u);
}

struct Cursor {
  const uint8_t* p;
  size_t n;
  size_t pos = 0;

  void need(size_t k) {
    if (pos + k > n) throw MalformedContainer("checkpoint: truncated record");
  }
  uint8_t u8() {
    need(1);
    return p[pos++];
  }
  uint16_t u16() {
    need(2);
    const uint16_t v = static_cast<uint16_t>(p[pos]) | static_cast<uint16_t>(p[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    const uint32_t v = static_cast<uint32_t>(p[pos]) | static_cast<uint32_t>(p[pos + 1]) << 8 |
                       static_cast<uint32_t>(p[pos + 2]) << 16 |
                       static_cast<uint32_t>(p[pos + 3]) << 24;
    pos += 4;
    return v;
  }
  float f32() {
    const uint32_t u = u32();
    float f;
    std::memcpy(&f, &u, 4);
    return f;
  }
};

}  // namespace

uint32_t crc32(const uint8_t* data, size_t len) {
  const uint32_t* t = crc_table();
  uint32_t c = 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) c = t[(c ^ data[i]) & 0xffu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

const Tensor<float>* CheckpointData::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::vector<uint8_t> serialize_checkpoint(const nlohmann::json& config,
                                          const std::vector<ParamRef<float>>& refs) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 4);
  put_u32(out, kCheckpointVersion);
  const std::string cfg = config.dump();
  put_u32(out, static_cast<uint32_t>(cfg.size()));
  out.insert(out.end(), cfg.begin(), cfg.end());
  for (const auto& r : refs) {
    if (r.name.size() > 0xFFFF) throw Error("checkpoint: tensor name too long");
    put_u16(out, static_cast<uint16_t>(r.name.size()));
    out.insert(out.end(), r.name.begin(), r.name.end());
    out.push_back(static_cast<uint8_t>(r.tensor->ndim()));
    for (int d : r.tensor->shape) put_u32(out, static_cast<uint32_t>(d));
    for (float v : r.tensor->data) put_f32(out, v);
  }
  put_u32(out, crc32(out.data(), out.size()));
  return out;
}

CheckpointData parse_checkpoint(std::span<const uint8_t> bytes) {
  if (bytes.size() < 16) throw MalformedContainer("checkpoint: file too small");
  // Integrity first: any byte flip is reported as a CRC failure.
  const uint32_t stored = static_cast<uint32_t>(bytes[bytes.size() - 4]) |
                          static_cast<uint32_t>(bytes[bytes.size() - 3]) << 8 |
                          static_cast<uint32_t>(bytes[bytes.size() - 2]) << 16 |
                          static_cast<uint32_t>(bytes[bytes.size() - 1]) << 24;
  const uint32_t computed = crc32(bytes.data(), bytes.size() - 4);
  if (stored != computed) throw CrcMismatch("checkpoint: CRC32 mismatch");

  Cursor c{bytes.data(), bytes.size() - 4};
  char magic[4];
  c.need(4);
  std::memcpy(magic, c.p, 4);
  c.pos = 4;
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw BadMagic("checkpoint: bad magic");
  }
  CheckpointData data;
  data.format_version = c.u32();
  if (data.format_version != kCheckpointVersion) {
    throw VersionUnsupported("checkpoint: unsupported format version " +
                             std::to_string(data.format_version));
  }
  const uint32_t cfg_len = c.u32();
  c.need(cfg_len);
  const std::string cfg(reinterpret_cast<const char*>(c.p + c.pos), cfg_len);
  c.pos += cfg_len;
  try {
    data.config = nlohmann::json::parse(cfg);
  } catch (const nlohmann::json::exception&) {
    throw MalformedContainer("checkpoint: config JSON unparsable");
  }
  while (c.pos < c.n) {
    const uint16_t name_len = c.u16();
    c.need(name_len);
    std::string name(reinterpret_cast<const char*>(c.p + c.pos), name_len);
    c.pos += name_len;
    const uint8_t ndim = c.u8();
    std::vector<int> shape(ndim);
    int64_t numel = 1;
    for (int i = 0; i < ndim; ++i) {
      shape[static_cast<size_t>(i)] = static_cast<int>(c.u32());
      numel *= shape[static_cast<size_t>(i)];
    }
    if (numel < 0 || numel > (1LL << 31)) throw MalformedContainer("checkpoint: bad dims");
    Tensor<float> t;
    t.shape = std::move(shape);
    t.data.resize(static_cast<size_t>(numel));
    for (int64_t i = 0; i < numel; ++i) t.data[static_cast<size_t>(i)] = c.f32();
    data.tensors.emplace_back(std::move(name), std::move(t));
  }
  return data;
}

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write: " + path.string());
}

// ---------------------------------------------------------------------------

CaseModel::CaseModel(const CaseConfig& config, uint64_t seed_value)
    : cfg(config),
      seed(seed_value),
      effnet(Rng(seed_value).fork(1)),
      cnn14(config.stage2_wavegram, Rng(seed_value).fork(2)),
      fusion(kEmbedding1Dim + tap_dim(config.stage2_tap), Rng(seed_value).fork(3)) {}

std::vector<ParamRef<float>> CaseModel::params() {
  std::vector<ParamRef<float>> refs;
  effnet.collect("effnet", refs);
  cnn14.collect("cnn14", refs);
  fusion.collect("fusion", refs);
  return refs;
}

nlohmann::json case_model_config(const CaseConfig& cfg, uint64_t seed) {
  nlohmann::json j;
  j["case"] = to_string(cfg.id);
  j["mel_bins_stage1"] = cfg.stage1_mel_bins;
  j["mel_bins_stage2"] = cfg.stage2_mel_bins;
  j["tap"] = to_string(cfg.stage2_tap);
  j["embedding_dims"] = {kEmbedding1Dim, tap_dim(cfg.stage2_tap)};
  j["seed"] = seed;
  j["format_version"] = kCheckpointVersion;
  return j;
}

std::vector<uint8_t> serialize_case_model(CaseModel& model) {
  return serialize_checkpoint(case_model_config(model.cfg, model.seed), model.params());
}

void save_case_model(CaseModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_case_model(model);
  write_file(path, bytes);
}

namespace {

void fill_from(const CheckpointData& data, std::vector<ParamRef<float>> refs,
               const char* what) {
  size_t used = 0;
  for (auto& r : refs) {
    const Tensor<float>* src = data.find(r.name);
    if (!src) {
      throw TensorShapeMismatch(std::string(what) + ": missing tensor " + r.name);
    }
    if (src->shape != r.tensor->shape) {
      throw TensorShapeMismatch(std::string(what) + ": shape mismatch for " + r.name +
                                " (file " + src->shape_str() + ", model " +
                                r.tensor->shape_str() + ")");
    }
    r.tensor->data = src->data;
    ++used;
  }
  if (used != data.tensors.size()) {
    throw TensorShapeMismatch(std::string(what) + ": file carries unexpected tensors");
  }
}

CaseConfig config_from_json(const nlohmann::json& j) {
  const CaseConfig& cfg = case_config(case_id_from_string(j.at("case").get<std::string>()));
  if (j.at("mel_bins_stage1").get<int>() != cfg.stage1_mel_bins ||
      j.at("mel_bins_stage2").get<int>() != cfg.stage2_mel_bins ||
      tap_from_string(j.at("tap").get<std::string>()) != cfg.stage2_tap) {
    throw MalformedContainer("checkpoint: config disagrees with the routing table");
  }
  return cfg;
}

}  // namespace

CaseModel load_case_model_bytes(std::span<const uint8_t> bytes) {
  const CheckpointData data = parse_checkpoint(bytes);
  const CaseConfig cfg = config_from_json(data.config);
  CaseModel model(cfg, data.config.at("seed").get<uint64_t>());
  fill_from(data, model.params(), "load_case_model");
  return model;
}

CaseModel load_case_model(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return load_case_model_bytes(bytes);
}

std::vector<uint8_t> serialize_cnn14_only(MiniCnn14<float>& model, const CaseConfig& cfg,
                                          uint64_t seed) {
  std::vector<ParamRef<float>> refs;
  model.collect("cnn14", refs);
  return serialize_checkpoint(case_model_config(cfg, seed), refs);
}

std::vector<uint8_t> serialize_feature_dump(const LogMelSpectrogram& spec) {
  std::vector<uint8_t> out;
  const std::string name = "logmel";
  put_u16(out, static_cast<uint16_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  out.push_back(2);
  put_u32(out, static_cast<uint32_t>(spec.mel_bins));
  put_u32(out, static_cast<uint32_t>(spec.n_frames));
  for (double v : spec.values) put_f32(out, static_cast<float>(v));
  put_u32(out, crc32(out.data(), out.size()));
  return out;
}

FeatureDump parse_feature_dump(std::span<const uint8_t> bytes) {
  if (bytes.size() < 8) throw MalformedContainer("feature dump: too small");
  const size_t body = bytes.size() - 4;
  const uint32_t stored = static_cast<uint32_t>(bytes[body]) |
                          static_cast<uint32_t>(bytes[body + 1]) << 8 |
                          static_cast<uint32_t>(bytes[body + 2]) << 16 |
                          static_cast<uint32_t>(bytes[body + 3]) << 24;
  if (stored != crc32(bytes.data(), body)) throw CrcMismatch("feature dump: CRC mismatch");
  Cursor c{bytes.data(), body};
  FeatureDump dump;
  const uint16_t name_len = c.u16();
  c.need(name_len);
  dump.name.assign(reinterpret_cast<const char*>(c.p + c.pos), name_len);
  c.pos += name_len;
  const uint8_t ndim = c.u8();
  int64_t numel = 1;
  for (int i = 0; i < ndim; ++i) {
    dump.shape.push_back(static_cast<int>(c.u32()));
    numel *= dump.shape.back();
  }
  dump.values.resize(static_cast<size_t>(numel));
  for (int64_t i = 0; i < numel; ++i) dump.values[static_cast<size_t>(i)] = c.f32();
  if (c.pos != c.n) throw MalformedContainer("feature dump: trailing bytes");
  return dump;
}

MiniCnn14<float> load_cnn14_only_bytes(std::span<const uint8_t> bytes,
                                       const CaseConfig& expect) {
  const CheckpointData data = parse_checkpoint(bytes);
  const CaseConfig cfg = config_from_json(data.config);
  if (cfg.stage2_rate != expect.stage2_rate ||
      cfg.stage2_wavegram != expect.stage2_wavegram ||
      cfg.stage2_mel_bins != expect.stage2_mel_bins) {
    throw TensorShapeMismatch("cnn14 checkpoint does not match the requested stage-2 case");
  }
  MiniCnn14<float> model(cfg.stage2_wavegram, Rng(data.config.at("seed").get<uint64_t>()).fork(2));
  std::vector<ParamRef<float>> refs;
  model.collect("cnn14", refs);
  fill_from(data, refs, "load_cnn14");
  return model;
}

}  // namespace fcv
