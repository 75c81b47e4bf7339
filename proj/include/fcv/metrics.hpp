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

#ifndef FCV_METRICS_HPP_
#define FCV_METRICS_HPP_

#include <string>
#include <vector>

#include "fcv/errors.hpp"

namespace fcv {

// Area under the ROC curve via the rank statistic with average ranks for
// ties: equals (#concordant + 0.5 * #tied) / (P * N). Needs at least one
// positive and one negative label.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct CvReport {
  std::vector<double> per_fold;
  double mean_auc = 0.0;
  double std_auc = 0.0;
  int n = 0;

  std::string to_json() const;
};

CvReport summarize_folds(const std::vector<double>& per_fold, int n);

}  // namespace fcv

#endif  // FCV_METRICS_HPP_
