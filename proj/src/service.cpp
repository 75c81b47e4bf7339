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

#include "fcv/service.hpp"

#include <chrono>

#include "httplib.h"
#include "nlohmann/json.hpp"

namespace fcv {

namespace {

std::string error_json(const std::string& code, const std::string& message) {
  nlohmann::json j;
  j["error"] = code;
  j["message"] = message;
  return j.dump();
}

void fill_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  res.status = status;
  res.set_content(error_json(code, message), "application/json");
}

char hex_digit(uint32_t v) { return "0123456789abcdef"[v & 0xf]; }

std::string crc_hex(uint32_t crc) {
  std::string s(8, '0');
  for (int i = 7; i >= 0; --i) {
    s[static_cast<size_t>(i)] = hex_digit(crc);
    crc >>= 4;
  }
  return s;
}

}  // namespace

std::string ScoreResponse::to_json() const {
  nlohmann::json j;
  j["probability"] = probability;
  j["label"] = label;
  j["case_id"] = case_id;
  j["model_version"] = model_version;
  j["latency_ms"] = latency_ms;
  return j.dump();
}

ScoringService::ScoringService(ServiceConfig cfg)
    : cfg_(std::move(cfg)), server_(std::make_unique<httplib::Server>()) {
  setup_routes();
}

ScoringService::~ScoringService() { stop(); }

void ScoringService::load_model(const std::filesystem::path& checkpoint) {
  const auto bytes = read_file(checkpoint);
  auto model = std::make_unique<CaseModel>(load_case_model_bytes(bytes));
  const CaseId id = model->cfg.id;
  Loaded loaded;
  loaded.version = "fcv1-" + crc_hex(crc32(bytes.data(), bytes.size()));
  loaded.model = std::move(model);
  models_[id] = std::move(loaded);
}

ScoreResponse ScoringService::score_bytes(std::span<const uint8_t> body) const {
  const auto start = std::chrono::steady_clock::now();
  const AudioClip clip = decode_wav(body);
  const CaseConfig& cfg = route(clip.sample_rate);
  const auto it = models_.find(cfg.id);
  if (it == models_.end()) {
    throw Error(std::string("no model loaded for ") + to_string(cfg.id));
  }
  const ScoreResult r = score_clip(*it->second.model, clip);
  ScoreResponse resp;
  resp.probability = r.probability;
  resp.label = r.probability >= cfg_.threshold ? "positive" : "negative";
  resp.case_id = to_string(r.case_id);
  resp.model_version = it->second.version;
  resp.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  return resp;
}

void ScoringService::setup_routes() {
  server_->set_payload_max_length(cfg_.max_body_bytes);
  server_->new_task_queue = [] { return new httplib::ThreadPool(16); };

  server_->Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"status\":\"ok\"}", "application/json");
  });

  server_->Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
    if (req.body.empty()) {
      fill_error(res, 400, "MalformedContainer", "empty request body");
      return;
    }
    try {
      const ScoreResponse resp = score_bytes(std::span<const uint8_t>(
          reinterpret_cast<const uint8_t*>(req.body.data()), req.body.size()));
      res.set_content(resp.to_json(), "application/json");
    } catch (const MalformedContainer& e) {
      fill_error(res, 400, "MalformedContainer", e.what());
    } catch (const UnsupportedEncoding& e) {
      fill_error(res, 400, "UnsupportedEncoding", e.what());
    } catch (const ClipTooShort& e) {
      fill_error(res, 400, "ClipTooShort", e.what());
    } catch (const Error& e) {
      const std::string what = e.what();
      if (what.find("no model loaded") != std::string::npos) {
        fill_error(res, 503, "ModelNotLoaded", what);
      } else {
        fill_error(res, 500, "InternalError", what);
      }
    }
  });

  // Errors raised outside handlers (404, 413, ...) still answer JSON.
  server_->set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    std::string code = "HttpError";
    if (res.status == 404) code = "NotFound";
    if (res.status == 413) code = "PayloadTooLarge";
    res.set_content(error_json(code, "status " + std::to_string(res.status)),
                    "application/json");
  });
  server_->set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "unknown error";
        try {
          if (ep) std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          message = e.what();
        } catch (...) {
        }
        fill_error(res, 500, "InternalError", message);
      });
}

int ScoringService::run() {
  if (cfg_.port == 0) {
    bound_port_ = server_->bind_to_any_port(cfg_.host);
    if (bound_port_ < 0) throw Error("service: cannot bind");
    return server_->listen_after_bind() ? 0 : 1;
  }
  bound_port_ = cfg_.port;
  return server_->listen(cfg_.host, cfg_.port) ? 0 : 1;
}

bool ScoringService::start_async() {
  if (cfg_.port == 0) {
    bound_port_ = server_->bind_to_any_port(cfg_.host);
  } else {
    bound_port_ = server_->bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1;
  }
  if (bound_port_ < 0) return false;
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return true;
}

void ScoringService::stop() {
  if (server_ && server_->is_running()) server_->stop();
  if (listener_.joinable()) listener_.join();
}

}  // namespace fcv
