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
// One-shot HTTP scoring service. POST /v1/score takes raw WAV bytes, routes
// them by sample rate to a loaded case model and answers with a JSON
// ScoreResponse. GET /v1/health reports liveness. Models are immutable once
// loaded and shared across request threads.

#ifndef FCV_SERVICE_HPP_
#define FCV_SERVICE_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <thread>

#include "fcv/checkpoint.hpp"
#include "fcv/pipeline.hpp"

namespace httplib {
class Server;
}

namespace fcv {

struct ScoreResponse {
  double probability = 0.0;
  std::string label;  // "positive" iff probability >= threshold
  std::string case_id;
  std::string model_version;
  double latency_ms = 0.0;

  std::string to_json() const;
};

struct ServiceConfig {
  std::string host = "0.0.0.0";
  int port = 8080;  // 0 = pick a free port
  double threshold = 0.5;
  size_t max_body_bytes = 25 * 1024 * 1024;
};

class ScoringService {
 public:
  explicit ScoringService(ServiceConfig cfg = {});
  ~ScoringService();

  ScoringService(const ScoringService&) = delete;
  ScoringService& operator=(const ScoringService&) = delete;

  void load_model(const std::filesystem::path& checkpoint);
  size_t model_count() const { return models_.size(); }

  // The single scoring path shared by the `predict` CLI and the HTTP
  // handler. Throws on undecodable input or a missing case model.
  ScoreResponse score_bytes(std::span<const uint8_t> body) const;

  int run();           // bind + blocking listen
  bool start_async();  // bind + background thread (tests)
  void stop();
  int port() const { return bound_port_; }

 private:
  void setup_routes();

  ServiceConfig cfg_;
  struct Loaded {
    std::unique_ptr<CaseModel> model;
    std::string version;
  };
  std::map<CaseId, Loaded> models_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;
  int bound_port_ = -1;
};

}  // namespace fcv

#endif  // FCV_SERVICE_HPP_
