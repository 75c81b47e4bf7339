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
// Command line front-end. Subcommands: routes, featurize, gen-synthetic,
// pretrain, train, cv, predict, evaluate, serve. Exit codes: 0 success,
// 1 usage error, 2 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fcv/config.hpp"
#include "fcv/service.hpp"
#include "nlohmann/json.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<uint64_t> seed;
};

fcv::PipelineConfig make_config(const CommonOpts& opts) {
  fcv::PipelineConfig cfg;
  if (!opts.config_path.empty()) cfg = fcv::load_pipeline_config(opts.config_path);
  if (opts.seed) cfg.train.seed = *opts.seed;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config overrides");
  cmd->add_option("--seed", opts.seed, "Run seed");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw fcv::Error("cannot write " + path.string());
  out << text;
}

void print_case_report(const fcv::CaseCvResult& c) {
  std::cout << fcv::to_string(c.case_id) << ": mean_auc=" << c.report.mean_auc
            << " std=" << c.report.std_auc << " per_fold=[";
  for (size_t i = 0; i < c.report.per_fold.size(); ++i) {
    std::cout << (i ? ", " : "") << c.report.per_fold[i];
  }
  std::cout << "] n=" << c.report.n << " proxy_auc=" << c.proxy_auc_after << "\n";
}

fs::path with_case_suffix(const fs::path& out, fcv::CaseId id) {
  std::string tag = fcv::to_string(id);
  std::transform(tag.begin(), tag.end(), tag.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  fs::path p = out;
  p.replace_extension();
  p += "." + tag + ".json";
  return p;
}

int run(int argc, char** argv) {
  CLI::App app{"Two-stage cough screening pipeline"};
  app.require_subcommand(1);

  // routes
  app.add_subcommand("routes", "Print the sampling-rate routing table");

  // featurize
  auto* featurize = app.add_subcommand("featurize", "Dump a routed log-mel feature matrix");
  CommonOpts feat_opts;
  std::string feat_input, feat_out;
  int feat_stage = 1;
  featurize->add_option("--input", feat_input, "Input WAV")->required();
  featurize->add_option("--out", feat_out, "Output dump path")->required();
  featurize->add_option("--stage", feat_stage, "Pipeline stage (1 or 2)")
      ->check(CLI::IsMember({1, 2}));
  add_common(featurize, feat_opts);

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic", "Generate the synthetic corpus");
  CommonOpts gen_opts;
  std::string gen_out;
  std::optional<int> gen_clips;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--clips-per-case", gen_clips, "Clips per routing case");
  add_common(gen, gen_opts);

  // pretrain
  auto* pretrain = app.add_subcommand("pretrain", "Proxy-pretrain a stage-2 backbone");
  CommonOpts pre_opts;
  std::string pre_case = "CASE_8K", pre_out;
  pretrain->add_option("--case", pre_case, "Routing case (CASE_4K/CASE_8K/CASE_48K)");
  pretrain->add_option("--out", pre_out, "Output checkpoint path")->required();
  add_common(pretrain, pre_opts);

  // train
  auto* train = app.add_subcommand("train", "Train a full bundle on one case");
  CommonOpts train_opts;
  std::string train_manifest, train_out, train_cnn14;
  train->add_option("--manifest", train_manifest, "Manifest CSV")->required();
  train->add_option("--out", train_out, "Output checkpoint path")->required();
  train->add_option("--cnn14", train_cnn14, "Reuse a pretrained stage-2 checkpoint");
  add_common(train, train_opts);

  // cv
  auto* cv = app.add_subcommand("cv", "Stratified k-fold cross-validation");
  CommonOpts cv_opts;
  std::string cv_manifest, cv_out;
  bool cv_shuffle = false;
  std::optional<int> cv_threads;
  cv->add_option("--manifest", cv_manifest, "Manifest CSV")->required();
  cv->add_option("--out", cv_out, "Pooled metrics JSON path");
  cv->add_flag("--shuffle-labels", cv_shuffle, "Permute labels (null control)");
  cv->add_option("--threads", cv_threads, "Worker threads (0 = hardware)");
  add_common(cv, cv_opts);

  // predict
  auto* predict = app.add_subcommand("predict", "Score one WAV file");
  std::string pred_model, pred_input;
  double pred_threshold = 0.5;
  predict->add_option("--model", pred_model, "Checkpoint path")->required();
  predict->add_option("--input", pred_input, "Input WAV")->required();
  predict->add_option("--threshold", pred_threshold, "Positive-label threshold");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a manifest and report AUC");
  std::string eval_model, eval_manifest, eval_out;
  evaluate->add_option("--model", eval_model, "Checkpoint path")->required();
  evaluate->add_option("--manifest", eval_manifest, "Manifest CSV")->required();
  evaluate->add_option("--out", eval_out, "Metrics JSON path");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP scoring service");
  std::vector<std::string> serve_models;
  int serve_port = 8080;
  double serve_threshold = 0.5;
  std::string serve_host = "0.0.0.0";
  serve->add_option("--model", serve_models, "Checkpoint path (repeatable)")->required();
  serve->add_option("--port", serve_port, "Listen port");
  serve->add_option("--threshold", serve_threshold, "Positive-label threshold");
  serve->add_option("--host", serve_host, "Bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      app.exit(e);
      return 0;
    }
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  if (app.got_subcommand("routes")) {
    std::cout << fcv::routes_table_text();
    return 0;
  }

  if (app.got_subcommand(featurize)) {
    const auto bytes = fcv::read_file(feat_input);
    const fcv::AudioClip clip = fcv::decode_wav(bytes, feat_input);
    const fcv::CaseConfig& cfg = fcv::route(clip.sample_rate);
    const fcv::AudioClip padded = fcv::repeat_pad_min_duration(clip);
    const fcv::LogMelSpectrogram spec = feat_stage == 1
                                            ? fcv::featurize_stage1(padded, cfg)
                                            : fcv::featurize_stage2(padded, cfg).spec;
    const auto dump = fcv::serialize_feature_dump(spec);
    fcv::write_file(feat_out, dump);
    std::cout << "wrote " << feat_out << " (" << spec.mel_bins << "x" << spec.n_frames
              << ", case " << fcv::to_string(cfg.id) << ")\n";
    return 0;
  }

  if (app.got_subcommand(gen)) {
    fcv::PipelineConfig cfg = make_config(gen_opts);
    if (gen_clips) cfg.corpus.clips_per_case = *gen_clips;
    const fcv::DatasetManifest manifest =
        fcv::generate_corpus(cfg.corpus, cfg.train.seed, gen_out);
    std::cout << "wrote " << manifest.rows.size() << " clips under " << gen_out << "\n";
    return 0;
  }

  if (app.got_subcommand(pretrain)) {
    fcv::PipelineConfig cfg = make_config(pre_opts);
    const fcv::CaseConfig& cc = fcv::case_config(fcv::case_id_from_string(pre_case));
    fcv::PretrainResult result = fcv::pretrain_proxy(cc, cfg);
    const auto bytes = fcv::serialize_cnn14_only(result.model, cc, cfg.train.seed);
    fcv::write_file(pre_out, bytes);
    std::cout << "proxy_auc_before=" << result.proxy_auc_before
              << " proxy_auc_after=" << result.proxy_auc_after << " wrote " << pre_out
              << "\n";
    return 0;
  }

  if (app.got_subcommand(train)) {
    fcv::PipelineConfig cfg = make_config(train_opts);
    const fcv::DatasetManifest manifest = fcv::DatasetManifest::load_csv(train_manifest);
    std::optional<fcv::MiniCnn14<float>> pretrained;
    if (!train_cnn14.empty()) {
      // Resolve the case first so the checkpoint can be validated against it.
      const auto head_bytes = fcv::read_file(manifest.rows.at(0).path);
      const fcv::CaseConfig& cc = fcv::route(fcv::decode_wav(head_bytes).sample_rate);
      pretrained = fcv::load_cnn14_only_bytes(fcv::read_file(train_cnn14), cc);
    }
    double train_auc = 0.0;
    fcv::CaseModel model = fcv::train_full(manifest, cfg,
                                           pretrained ? &*pretrained : nullptr, &train_auc);
    fcv::save_case_model(model, train_out);
    std::cout << "case=" << fcv::to_string(model.cfg.id) << " train_auc=" << train_auc
              << " wrote " << train_out << "\n";
    return 0;
  }

  if (app.got_subcommand(cv)) {
    fcv::PipelineConfig cfg = make_config(cv_opts);
    if (cv_threads) cfg.threads = *cv_threads;
    const fcv::DatasetManifest manifest = fcv::DatasetManifest::load_csv(cv_manifest);
    fcv::CvOptions opts;
    opts.shuffle_labels = cv_shuffle;
    const fcv::CvResult result = fcv::cross_validate(manifest, cfg, opts);
    for (const auto& c : result.cases) print_case_report(c);
    std::cout << "pooled: mean_auc=" << result.pooled.mean_auc
              << " std=" << result.pooled.std_auc << " n=" << result.pooled.n << "\n";
    if (!cv_out.empty()) {
      write_text(cv_out, result.pooled.to_json());
      for (const auto& c : result.cases) {
        write_text(with_case_suffix(cv_out, c.case_id), c.report.to_json());
      }
      std::cout << "wrote " << cv_out << "\n";
    }
    return 0;
  }

  if (app.got_subcommand(predict)) {
    fcv::ServiceConfig scfg;
    scfg.threshold = pred_threshold;
    fcv::ScoringService svc(scfg);
    svc.load_model(pred_model);
    const auto bytes = fcv::read_file(pred_input);
    const fcv::ScoreResponse resp = svc.score_bytes(bytes);
    std::cout << resp.to_json() << "\n";
    return 0;
  }

  if (app.got_subcommand(evaluate)) {
    fcv::CaseModel model = fcv::load_case_model(eval_model);
    const fcv::DatasetManifest manifest = fcv::DatasetManifest::load_csv(eval_manifest);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& row : manifest.rows) {
      const auto bytes = fcv::read_file(row.path);
      const fcv::AudioClip clip = fcv::decode_wav(bytes, row.uuid);
      scores.push_back(fcv::score_clip(model, clip).probability);
      labels.push_back(row.label);
    }
    const double value = fcv::auc(scores, labels);
    nlohmann::json j;
    j["auc"] = value;
    j["n"] = manifest.rows.size();
    std::cout << j.dump() << "\n";
    if (!eval_out.empty()) write_text(eval_out, j.dump());
    return 0;
  }

  if (app.got_subcommand(serve)) {
    fcv::ServiceConfig scfg;
    scfg.host = serve_host;
    scfg.port = serve_port;
    scfg.threshold = serve_threshold;
    fcv::ScoringService svc(scfg);
    for (const auto& m : serve_models) svc.load_model(m);
    std::cout << "listening on " << serve_host << ":" << serve_port << " with "
              << svc.model_count() << " model(s)\n"
              << std::flush;
    return svc.run();
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const fcv::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
