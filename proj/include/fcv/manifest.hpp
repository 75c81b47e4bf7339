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

#ifndef FCV_MANIFEST_HPP_
#define FCV_MANIFEST_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fcv/errors.hpp"

namespace fcv {

struct ManifestRow {
  std::string uuid;
  std::string path;
  int label = 0;   // 1 = positive
  int fold = -1;   // optional; -1 when absent
};

// UTF-8 CSV with header `uuid,path,label[,fold]`. uuids must be unique and
// labels binary.
struct DatasetManifest {
  std::vector<ManifestRow> rows;

  static DatasetManifest load_csv(const std::filesystem::path& path,
                                  bool check_paths = true);
  void save_csv(const std::filesystem::path& path) const;
};

struct FoldPlan {
  int k = 0;
  std::vector<int> fold_of;  // aligned with manifest rows

  std::vector<int> train_indices(int fold) const;
  std::vector<int> eval_indices(int fold) const;
};

// Deterministic stratified split: per-class shuffle followed by round-robin
// assignment, so per-fold positive counts differ by at most one.
FoldPlan kfold_split(const DatasetManifest& manifest, int k, uint64_t seed);

}  // namespace fcv

#endif  // FCV_MANIFEST_HPP_
