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

#ifndef FCV_CONFIG_HPP_
#define FCV_CONFIG_HPP_

#include <filesystem>
#include <string>

#include "fcv/pipeline.hpp"

namespace fcv {

// Applies a JSON override document onto the defaults. Recognized sections:
// train, augment, pretrain, corpus, threads. Unknown keys are rejected.
void apply_config_json(PipelineConfig& cfg, const std::string& json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

}  // namespace fcv

#endif  // FCV_CONFIG_HPP_
