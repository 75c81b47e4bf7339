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

#include "fcv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nlohmann/json.hpp"

namespace fcv {

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw Error("auc: size mismatch");
  int64_t pos = 0, neg = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error("auc: labels must be 0/1");
    if (!std::isfinite(scores[i])) throw Error("auc: non-finite score");
    if (labels[i] == 1) {
      ++pos;
    } else {
      ++neg;
    }
  }
  if (pos == 0 || neg == 0) throw SingleClass("auc: need both classes");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Average rank within each tie group; ranks are 1-based. All quantities
  // are exact halves, so the result matches a pairwise count bit for bit.
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

CvReport summarize_folds(const std::vector<double>& per_fold, int n) {
  CvReport r;
  r.per_fold = per_fold;
  r.n = n;
  if (per_fold.empty()) return r;
  double acc = 0.0;
  for (double v : per_fold) acc += v;
  r.mean_auc = acc / static_cast<double>(per_fold.size());
  double var = 0.0;
  for (double v : per_fold) var += (v - r.mean_auc) * (v - r.mean_auc);
  r.std_auc = std::sqrt(var / static_cast<double>(per_fold.size()));
  return r;
}

std::string CvReport::to_json() const {
  nlohmann::json j;
  j["per_fold"] = per_fold;
  j["mean_auc"] = mean_auc;
  j["std_auc"] = std_auc;
  j["n"] = n;
  return j.dump();
}

}  // namespace fcv
