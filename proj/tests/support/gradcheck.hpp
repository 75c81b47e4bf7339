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
// Central finite-difference gradient checks for every differentiable op,
// shared by the unit suite (small case counts) and the acceptance suite
// (full case counts). All checks run at 64-bit precision.

#ifndef FCV_TESTS_SUPPORT_GRADCHECK_HPP_
#define FCV_TESTS_SUPPORT_GRADCHECK_HPP_

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fcv/models.hpp"
#include "fcv/nn.hpp"

namespace fcv::testing {

constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-5;

// |a - n| relative to max(1, |a|, |n|); the "1" floor keeps near-zero
// gradients from inflating the ratio past double noise.
inline double rel_err(double a, double n) {
  return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
}

// Checks d(loss)/d(slot[i]) for every i, where loss = eval(). eval must be a
// pure function of the slot values.
inline double max_grad_err(std::vector<double>& slot, const std::vector<double>& analytic,
                           const std::function<double()>& eval) {
  double worst = 0.0;
  for (size_t i = 0; i < slot.size(); ++i) {
    const double keep = slot[i];
    const double h = kGradStep * std::max(1.0, std::abs(keep));
    slot[i] = keep + h;
    const double up = eval();
    slot[i] = keep - h;
    const double down = eval();
    slot[i] = keep;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, rel_err(analytic[i], numeric));
  }
  return worst;
}

inline Tensor<double> random_tensor(std::vector<int> shape, Rng& rng, double lo, double hi) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// Scalar loss = sum(y * projection) with a fixed random projection, so the
// upstream gradient is the projection itself.
struct Projection {
  std::vector<double> r;
  explicit Projection(int64_t n, Rng& rng) : r(static_cast<size_t>(n)) {
    for (auto& v : r) v = rng.uniform(-1.0, 1.0);
  }
  double apply(const Tensor<double>& y) const {
    double acc = 0.0;
    for (size_t i = 0; i < y.data.size(); ++i) acc += y.data[i] * r[i];
    return acc;
  }
  Tensor<double> as_grad(const std::vector<int>& shape) const {
    Tensor<double> g(shape);
    g.data = r;
    return g;
  }
};

struct GradCaseResult {
  double worst = 0.0;
  int cases = 0;
};

inline GradCaseResult check_conv2d(int n_cases, uint64_t seed) {
  GradCaseResult res;
  Rng rng(seed);
  for (int c = 0; c < n_cases; ++c) {
    Rng r = rng.fork(static_cast<uint64_t>(c));
    const int N = static_cast<int>(r.uniform_int(1, 2));
    const int C = static_cast<int>(r.uniform_int(1, 3));
    const int F = static_cast<int>(r.uniform_int(1, 3));
    const int KH = static_cast<int>(r.uniform_int(1, 3));
    const int KW = static_cast<int>(r.uniform_int(1, 3));
    const int stride = static_cast<int>(r.uniform_int(1, 2));
    const int pad = static_cast<int>(r.uniform_int(0, 2));
    const int H = KH + static_cast<int>(r.uniform_int(0, 4));
    const int W = KW + static_cast<int>(r.uniform_int(0, 4));
    Tensor<double> x = random_tensor({N, C, H, W}, r, -1.0, 1.0);
    Tensor<double> k = random_tensor({F, C, KH, KW}, r, -1.0, 1.0);
    Tensor<double> y = nn::conv2d(x, k, stride, pad);
    Projection proj(y.numel(), r);
    Tensor<double> gy = proj.as_grad(y.shape);
    Tensor<double> gx(x.shape), gk(k.shape);
    nn::conv2d_backward(x, k, stride, pad, gy, &gx, &gk);
    const auto eval = [&] { return proj.apply(nn::conv2d(x, k, stride, pad)); };
    res.worst = std::max(res.worst, max_grad_err(x.data, gx.data, eval));
    res.worst = std::max(res.worst, max_grad_err(k.data, gk.data, eval));
    ++res.cases;
  }
  return res;
}

inline GradCaseResult check_conv1d(int n_cases, uint64_t seed) {
  GradCaseResult res;
  Rng rng(seed);
  for (int c = 0; c < n_cases; ++c) {
    Rng r = rng.fork(static_cast<uint64_t>(c));
    const int N = static_cast<int>(r.uniform_int(1, 2));
    const int C = static_cast<int>(r.uniform_int(1, 3));
    const int F = static_cast<int>(r.uniform_int(1, 3));
    const int KL = static_cast<int>(r.uniform_int(1, 4));
    const int stride = static_cast<int>(r.uniform_int(1, 3));
    const int pad = static_cast<int>(r.uniform_int(0, 2));
    const int L = KL + static_cast<int>(r.uniform_int(0, 9));
    Tensor<double> x = random_tensor({N, C, L}, r, -1.0, 1.0);
    Tensor<double> k = random_tensor({F, C, KL}, r, -1.0, 1.0);
    Tensor<double> y = nn::conv1d(x, k, stride, pad);
    Projection proj(y.numel(), r);
    Tensor<double> gy = proj.as_grad(y.shape);
    Tensor<double> gx(x.shape), gk(k.shape);
    nn::conv1d_backward(x, k, stride, pad, gy, &gx, &gk);
    const auto eval = [&] { return proj.apply(nn::conv1d(x, k, stride, pad)); };
    res.worst = std::max(res.worst, max_grad_err(x.data, gx.data, eval));
    res.worst = std::max(res.worst, max_grad_err(k.data, gk.data, eval));
    ++res.cases;
  }
  return res;
}

inline GradCaseResult check_batchnorm(int n_cases, uint64_t seed) {
  GradCaseResult res;
  Rng rng(seed);
  for (int c = 0; c < n_cases; ++c) {
    Rng r = rng.fork(static_cast<uint64_t>(c));
    const int N = static_cast<int>(r.uniform_int(2, 4));
    const int C = static_cast<int>(r.uniform_int(1, 3));
    const int H = static_cast<int>(r.uniform_int(1, 4));
    const int W = static_cast<int>(r.uniform_int(1, 4));
    Tensor<double> x = random_tensor({N, C, H, W}, r, -2.0, 2.0);
    Tensor<double> gamma = random_tensor({C}, r, 0.5, 1.5);
    Tensor<double> beta = random_tensor({C}, r, -0.5, 0.5);
    Tensor<double> rm = Tensor<double>::zeros({C});
    Tensor<double> rv = Tensor<double>::full({C}, 1.0);
    nn::BatchNormCache<double> cache;
    Tensor<double> y = nn::batchnorm_forward(x, gamma, beta, rm, rv, true, 0.9, 1e-5, &cache);
    Projection proj(y.numel(), r);
    Tensor<double> gy = proj.as_grad(y.shape);
    Tensor<double> gx(x.shape), gg(gamma.shape), gb(beta.shape);
    nn::batchnorm_backward(cache, gamma, gy, &gx, &gg, &gb);
    const auto eval2 = [&] {
      Tensor<double> rm2 = Tensor<double>::zeros({C});
      Tensor<double> rv2 = Tensor<double>::full({C}, 1.0);
      return proj.apply(
          nn::batchnorm_forward<double>(x, gamma, beta, rm2, rv2, true, 0.9, 1e-5, nullptr));
    };
    res.worst = std::max(res.worst, max_grad_err(x.data, gx.data, eval2));
    res.worst = std::max(res.worst, max_grad_err(gamma.data, gg.data, eval2));
    res.worst = std::max(res.worst, max_grad_err(beta.data, gb.data, eval2));
    ++res.cases;
  }
  return res;
}

inline GradCaseResult check_gem(int n_cases, uint64_t seed) {
  GradCaseResult res;
  Rng rng(seed);
  for (int c = 0; c < n_cases; ++c) {
    Rng r = rng.fork(static_cast<uint64_t>(c));
    const int N = static_cast<int>(r.uniform_int(1, 2));
    const int C = static_cast<int>(r.uniform_int(1, 3));
    const int H = static_cast<int>(r.uniform_int(1, 4));
    const int W = static_cast<int>(r.uniform_int(1, 4));
    // Stay clear of the clamp boundary so the subgradient is exact.
    Tensor<double> x = random_tensor({N, C, H, W}, r, 0.05, 2.0);
    double p = r.uniform(0.8, 4.0);
    nn::GemCache<double> cache;
    Tensor<double> y = nn::gem_pool(x, p, &cache);
    Projection proj(y.numel(), r);
    Tensor<double> gy = proj.as_grad(y.shape);
    Tensor<double> gx(x.shape);
    double gp = 0.0;
    nn::gem_pool_backward(cache, x, gy, &gx, &gp);
    const auto eval = [&] { return proj.apply(nn::gem_pool<double>(x, p, nullptr)); };
    res.worst = std::max(res.worst, max_grad_err(x.data, gx.data, eval));
    std::vector<double> pslot{p};
    const auto eval_p = [&] { return proj.apply(nn::gem_pool<double>(x, pslot[0], nullptr)); };
    res.worst = std::max(res.worst, max_grad_err(pslot, {gp}, eval_p));
    ++res.cases;
  }
  return res;
}

inline GradCaseResult check_linear(int n_cases, uint64_t seed) {
  GradCaseResult res;
  Rng rng(seed);
  for (int c = 0; c < n_cases; ++c) {
    Rng r = rng.fork(static_cast<uint64_t>(c));
    const int N = static_cast<int>(r.uniform_int(1, 4));
    const int D = static_cast<int>(r.uniform_int(1, 6));
    const int O = static_cast<int>(r.uniform_int(1, 4));
    Tensor<double> x = random_tensor({N, D}, r, -1.0, 1.0);
    Tensor<double> w = random_tensor({O, D}, r, -1.0, 1.0);
    Tensor<double> b = random_tensor({O}, r, -1.0, 1.0);
    Tensor<double> y = nn::linear(x, w, b);
    Projection proj(y.numel(), r);
    Tensor<double> gy = proj.as_grad(y.shape);
    Tensor<double> gx(x.shape), gw(w.shape), gb(b.shape);
    nn::linear_backward(x, w, gy, &gx, &gw, &gb);
    const auto eval = [&] { return proj.apply(nn::linear(x, w, b)); };
    res.worst = std::max(res.worst, max_grad_err(x.data, gx.data, eval));
    res.worst = std::max(res.worst, max_grad_err(w.data, gw.data, eval));
    res.worst = std::max(res.worst, max_grad_err(b.data, gb.data, eval));
    ++res.cases;
  }
  return res;
}

inline GradCaseResult check_bce(int n_cases, uint64_t seed) {
  GradCaseResult res;
  Rng rng(seed);
  for (int c = 0; c < n_cases; ++c) {
    Rng r = rng.fork(static_cast<uint64_t>(c));
    const int N = static_cast<int>(r.uniform_int(1, 8));
    Tensor<double> z = random_tensor({N}, r, -4.0, 4.0);
    Tensor<double> y({N});
    for (auto& v : y.data) v = r.uniform01() < 0.5 ? 0.0 : 1.0;
    Tensor<double> gz(z.shape);
    nn::bce_with_logits_backward(z, y, 1.0, &gz);
    const auto eval = [&] { return nn::bce_with_logits(z, y); };
    res.worst = std::max(res.worst, max_grad_err(z.data, gz.data, eval));
    ++res.cases;
  }
  return res;
}

// Fusion: scalar logit from a concatenated embedding through the affine
// head, with BCE on top; gradients on the embedding halves and the head.
inline GradCaseResult check_fusion(int n_cases, uint64_t seed) {
  GradCaseResult res;
  Rng rng(seed);
  for (int c = 0; c < n_cases; ++c) {
    Rng r = rng.fork(static_cast<uint64_t>(c));
    const int D1 = static_cast<int>(r.uniform_int(2, 6));
    const int D2 = static_cast<int>(r.uniform_int(2, 6));
    const int N = static_cast<int>(r.uniform_int(1, 4));
    Tensor<double> x({N, D1 + D2});
    for (auto& v : x.data) v = r.uniform(-1.0, 1.0);
    Tensor<double> w = random_tensor({1, D1 + D2}, r, -1.0, 1.0);
    Tensor<double> b = random_tensor({1}, r, -0.5, 0.5);
    Tensor<double> targets({N});
    for (auto& v : targets.data) v = r.uniform01() < 0.5 ? 0.0 : 1.0;
    const auto eval = [&] {
      Tensor<double> logits = nn::linear(x, w, b);
      logits.shape = {N};
      return nn::bce_with_logits(logits, targets);
    };
    Tensor<double> logits = nn::linear(x, w, b);
    logits.shape = {N};
    Tensor<double> glogits(logits.shape);
    nn::bce_with_logits_backward(logits, targets, 1.0, &glogits);
    glogits.shape = {N, 1};
    Tensor<double> gx(x.shape), gw(w.shape), gb(b.shape);
    nn::linear_backward(x, w, glogits, &gx, &gw, &gb);
    res.worst = std::max(res.worst, max_grad_err(x.data, gx.data, eval));
    res.worst = std::max(res.worst, max_grad_err(w.data, gw.data, eval));
    res.worst = std::max(res.worst, max_grad_err(b.data, gb.data, eval));
    ++res.cases;
  }
  return res;
}

}  // namespace fcv::testing

#endif  // FCV_TESTS_SUPPORT_GRADCHECK_HPP_
