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

#include "fcv/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "fcv/rng.hpp"

namespace fcv {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

DatasetManifest DatasetManifest::load_csv(const std::filesystem::path& path,
                                          bool check_paths) {
  std::ifstream in(path);
  if (!in) throw Error("manifest: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("manifest: empty file");
  line = strip_cr(line);
  const bool with_fold = line == "uuid,path,label,fold";
  if (!with_fold && line != "uuid,path,label") {
    throw Error("manifest: bad header, expected uuid,path,label[,fold]");
  }

  DatasetManifest m;
  std::unordered_set<std::string> seen;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != (with_fold ? 4u : 3u)) {
      throw Error("manifest: wrong field count at line " + std::to_string(line_no));
    }
    ManifestRow row;
    row.uuid = fields[0];
    row.path = fields[1];
    if (row.uuid.empty()) throw Error("manifest: empty uuid at line " + std::to_string(line_no));
    if (!seen.insert(row.uuid).second) {
      throw Error("manifest: duplicate uuid " + row.uuid);
    }
    if (fields[2] != "0" && fields[2] != "1") {
      throw Error("manifest: label must be 0 or 1 at line " + std::to_string(line_no));
    }
    row.label = fields[2] == "1" ? 1 : 0;
    if (with_fold && !fields[3].empty()) row.fold = std::stoi(fields[3]);
    if (check_paths) {
      std::filesystem::path p(row.path);
      if (p.is_relative()) p = path.parent_path() / p;
      if (!std::filesystem::exists(p)) {
        throw Error("manifest: missing file " + p.string());
      }
      row.path = p.string();
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

void DatasetManifest::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("manifest: cannot write " + path.string());
  bool any_fold = false;
  for (const auto& r : rows) any_fold = any_fold || r.fold >= 0;
  out << (any_fold ? "uuid,path,label,fold\n" : "uuid,path,label\n");
  for (const auto& r : rows) {
    out << r.uuid << ',' << r.path << ',' << r.label;
    if (any_fold) {
      out << ',';
      if (r.fold >= 0) out << r.fold;
    }
    out << '\n';
  }
}

std::vector<int> FoldPlan::train_indices(int fold) const {
  std::vector<int> out;
  for (size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> FoldPlan::eval_indices(int fold) const {
  std::vector<int> out;
  for (size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(static_cast<int>(i));
  }
  return out;
}

FoldPlan kfold_split(const DatasetManifest& manifest, int k, uint64_t seed) {
  if (k < 2) throw Error("kfold_split: k must be at least 2");
  std::vector<int> by_class[2];
  for (size_t i = 0; i < manifest.rows.size(); ++i) {
    by_class[manifest.rows[i].label].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < 2; ++c) {
    if (static_cast<int>(by_class[c].size()) < k) {
      throw TooFewSamples("kfold_split: class " + std::to_string(c) + " has " +
                          std::to_string(by_class[c].size()) + " rows, need >= " +
                          std::to_string(k));
    }
  }
  FoldPlan plan;
  plan.k = k;
  plan.fold_of.assign(manifest.rows.size(), -1);
  Rng rng(seed);
  for (int c = 0; c < 2; ++c) {
    Rng r = rng.fork(static_cast<uint64_t>(c));
    r.shuffle(by_class[c]);
    for (size_t i = 0; i < by_class[c].size(); ++i) {
      plan.fold_of[static_cast<size_t>(by_class[c][i])] = static_cast<int>(i % k);
    }
  }
  return plan;
}

}  // namespace fcv
