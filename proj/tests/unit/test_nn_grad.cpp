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
// Finite-difference smoke runs of the shared gradient checks. The
// acceptance suite re-runs the same checks at the full case counts.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "support/gradcheck.hpp"

using namespace fcv::testing;

TEST_CASE("conv2d gradients") {
  const auto r = check_conv2d(12, 100);
  CHECK(r.cases == 12);
  CHECK(r.worst < kGradTol);
}

TEST_CASE("conv1d gradients") {
  const auto r = check_conv1d(12, 200);
  CHECK(r.worst < kGradTol);
}

TEST_CASE("batchnorm gradients (x, gamma, beta)") {
  const auto r = check_batchnorm(12, 300);
  CHECK(r.worst < kGradTol);
}

TEST_CASE("gem gradients including dL/dp") {
  const auto r = check_gem(12, 400);
  CHECK(r.worst < kGradTol);
}

TEST_CASE("linear gradients") {
  const auto r = check_linear(12, 500);
  CHECK(r.worst < kGradTol);
}

TEST_CASE("bce-with-logits gradients") {
  const auto r = check_bce(12, 600);
  CHECK(r.worst < kGradTol);
}

TEST_CASE("fusion head gradients through concat + BCE") {
  const auto r = check_fusion(12, 700);
  CHECK(r.worst < kGradTol);
}

TEST_CASE("avgpool and adaptive pool gradients") {
  fcv::Rng rng(800);
  for (int c = 0; c < 10; ++c) {
    fcv::Rng r = rng.fork(static_cast<uint64_t>(c));
    const int H = static_cast<int>(r.uniform_int(1, 5));
    const int W = static_cast<int>(r.uniform_int(1, 7));
    fcv::Tensor<double> x = random_tensor({1, 2, H, W}, r, -1.0, 1.0);

    fcv::Tensor<double> y = fcv::nn::avgpool2x2(x);
    Projection proj(y.numel(), r);
    fcv::Tensor<double> gy = proj.as_grad(y.shape);
    fcv::Tensor<double> gx(x.shape);
    fcv::nn::avgpool2x2_backward(x.shape, gy, &gx);
    const auto eval = [&] { return proj.apply(fcv::nn::avgpool2x2(x)); };
    CHECK(max_grad_err(x.data, gx.data, eval) < kGradTol);

    const int T = static_cast<int>(r.uniform_int(1, 9));
    fcv::Tensor<double> y2 = fcv::nn::adaptive_avgpool_w(x, T);
    Projection proj2(y2.numel(), r);
    fcv::Tensor<double> gy2 = proj2.as_grad(y2.shape);
    fcv::Tensor<double> gx2(x.shape);
    fcv::nn::adaptive_avgpool_w_backward(x.shape, gy2, &gx2);
    const auto eval2 = [&] { return proj2.apply(fcv::nn::adaptive_avgpool_w(x, T)); };
    CHECK(max_grad_err(x.data, gx2.data, eval2) < kGradTol);
  }
}

TEST_CASE("global avgpool gradients") {
  fcv::Rng rng(900);
  fcv::Tensor<double> x = random_tensor({2, 3, 4, 5}, rng, -1.0, 1.0);
  fcv::Tensor<double> y = fcv::nn::global_avgpool(x);
  Projection proj(y.numel(), rng);
  fcv::Tensor<double> gy = proj.as_grad(y.shape);
  fcv::Tensor<double> gx(x.shape);
  fcv::nn::global_avgpool_backward(x.shape, gy, &gx);
  const auto eval = [&] { return proj.apply(fcv::nn::global_avgpool(x)); };
  CHECK(max_grad_err(x.data, gx.data, eval) < kGradTol);
}
