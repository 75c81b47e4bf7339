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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "fcv/nn.hpp"

using namespace fcv;

TEST_CASE("conv2d: 1x1 identity kernel reproduces the input") {
  Rng rng(1);
  Tensor<double> x = Tensor<double>::randn({1, 1, 5, 6}, rng, 1.0);
  Tensor<double> k = Tensor<double>::full({1, 1, 1, 1}, 1.0);
  const Tensor<double> y = nn::conv2d(x, k, 1, 0);
  CHECK(y.shape == x.shape);
  for (size_t i = 0; i < x.data.size(); ++i) CHECK(y.data[i] == x.data[i]);
}

TEST_CASE("conv2d: hand-computed valid correlation") {
  Tensor<double> x({1, 1, 2, 2});
  x.data = {1, 2, 3, 4};
  Tensor<double> k({1, 1, 2, 2});
  k.data = {1, 0, 0, 1};
  const Tensor<double> y = nn::conv2d(x, k, 1, 0);
  CHECK(y.shape == std::vector<int>{1, 1, 1, 1});
  CHECK(y.data[0] == 5.0);
}

TEST_CASE("conv2d: output dims follow the floor formula") {
  Tensor<double> x({1, 1, 7, 9});
  Tensor<double> k({2, 1, 3, 3});
  const Tensor<double> y = nn::conv2d(x, k, 2, 1);
  CHECK(y.dim(2) == (7 + 2 - 3) / 2 + 1);
  CHECK(y.dim(3) == (9 + 2 - 3) / 2 + 1);
  CHECK_THROWS_AS(nn::conv2d(x, Tensor<double>({2, 3, 3, 3}), 1, 0), ShapeMismatch);
}

TEST_CASE("conv1d: identity 1-tap kernel and hand-computed example") {
  Tensor<double> x({1, 1, 3});
  x.data = {1, 2, 3};
  Tensor<double> k1({1, 1, 1});
  k1.data = {1};
  const Tensor<double> y1 = nn::conv1d(x, k1, 1, 0);
  CHECK(y1.data == x.data);

  Tensor<double> k2({1, 1, 2});
  k2.data = {1, 1};
  const Tensor<double> y2 = nn::conv1d(x, k2, 1, 0);
  CHECK(y2.shape == std::vector<int>{1, 1, 2});
  CHECK(y2.data[0] == 3.0);
  CHECK(y2.data[1] == 5.0);
}

TEST_CASE("batchnorm: zero-mean unit-variance batch with identity affine") {
  Rng rng(2);
  Tensor<double> x({4, 1, 2, 2});
  for (auto& v : x.data) v = rng.normal();
  // Normalize the batch by hand first so BN becomes a near-no-op.
  double mean = 0.0;
  for (double v : x.data) mean += v;
  mean /= static_cast<double>(x.data.size());
  double var = 0.0;
  for (double v : x.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.data.size());
  for (auto& v : x.data) v = (v - mean) / std::sqrt(var);

  Tensor<double> gamma = Tensor<double>::full({1}, 1.0);
  Tensor<double> beta = Tensor<double>::zeros({1});
  Tensor<double> rm = Tensor<double>::zeros({1});
  Tensor<double> rv = Tensor<double>::full({1}, 1.0);
  const Tensor<double> y =
      nn::batchnorm_forward(x, gamma, beta, rm, rv, true, 0.9, 1e-5, nullptr);
  for (size_t i = 0; i < x.data.size(); ++i) CHECK(std::abs(y.data[i] - x.data[i]) < 1e-4);
}

TEST_CASE("batchnorm: constant channel collapses to beta") {
  Tensor<double> x = Tensor<double>::full({3, 2, 2, 2}, 7.5);
  Tensor<double> gamma = Tensor<double>::full({2}, 2.0);
  Tensor<double> beta({2});
  beta.data = {0.25, -0.5};
  Tensor<double> rm = Tensor<double>::zeros({2});
  Tensor<double> rv = Tensor<double>::full({2}, 1.0);
  const Tensor<double> y =
      nn::batchnorm_forward(x, gamma, beta, rm, rv, true, 0.9, 1e-5, nullptr);
  for (int n = 0; n < 3; ++n) {
    for (int c = 0; c < 2; ++c) {
      for (int i = 0; i < 4; ++i) {
        CHECK(y.data[static_cast<size_t>((n * 2 + c) * 4 + i)] ==
              doctest::Approx(beta.data[static_cast<size_t>(c)]));
      }
    }
  }
}

TEST_CASE("batchnorm: eval mode uses running statistics") {
  Tensor<double> x = Tensor<double>::full({2, 1, 1, 2}, 3.0);
  Tensor<double> gamma = Tensor<double>::full({1}, 1.0);
  Tensor<double> beta = Tensor<double>::zeros({1});
  Tensor<double> rm = Tensor<double>::full({1}, 1.0);
  Tensor<double> rv = Tensor<double>::full({1}, 4.0);
  const Tensor<double> y =
      nn::batchnorm_forward(x, gamma, beta, rm, rv, false, 0.9, 0.0, nullptr);
  for (double v : y.data) CHECK(v == doctest::Approx(1.0));  // (3-1)/sqrt(4)
  CHECK(rm.data[0] == 1.0);  // untouched in eval mode
}

TEST_CASE("gem_pool: p=1 equals the arithmetic mean within 1e-12") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor<double> x({1, 2, 4, 4});
    for (auto& v : x.data) v = rng.uniform(0.1, 1.0);
    const Tensor<double> y = nn::gem_pool<double>(x, 1.0, nullptr);
    for (int c = 0; c < 2; ++c) {
      double mean = 0.0;
      for (int i = 0; i < 16; ++i) mean += x.data[static_cast<size_t>(c * 16 + i)];
      mean /= 16.0;
      CHECK(std::abs(y.data[static_cast<size_t>(c)] - mean) <= 1e-12);
    }
  }
}

TEST_CASE("gem_pool: cells {1,2} with p=3") {
  Tensor<double> x({1, 1, 1, 2});
  x.data = {1.0, 2.0};
  const Tensor<double> y = nn::gem_pool<double>(x, 3.0, nullptr);
  CHECK(y.data[0] == doctest::Approx(std::cbrt(4.5)).epsilon(1e-9));
  CHECK(y.data[0] == doctest::Approx(1.6510).epsilon(1e-3));
}

TEST_CASE("gem_pool: large p approaches the max") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor<double> x({1, 1, 5, 5});
    for (auto& v : x.data) v = rng.uniform(0.1, 1.0);
    const Tensor<double> y = nn::gem_pool<double>(x, 100.0, nullptr);
    double mx = 0.0;
    for (double v : x.data) mx = std::max(mx, v);
    CHECK(y.data[0] <= mx + 1e-12);
    CHECK(y.data[0] >= 0.95 * mx);
  }
}

TEST_CASE("gem_pool: monotone in each input cell") {
  Rng rng(5);
  Tensor<double> x({1, 1, 3, 3});
  for (auto& v : x.data) v = rng.uniform(0.1, 1.0);
  const double base = nn::gem_pool<double>(x, 3.0, nullptr).data[0];
  for (size_t i = 0; i < x.data.size(); ++i) {
    Tensor<double> bumped = x;
    bumped.data[i] += 0.05;
    CHECK(nn::gem_pool<double>(bumped, 3.0, nullptr).data[0] > base);
  }
}

TEST_CASE("bce_with_logits: analytic values and stability") {
  Tensor<double> z({1}), y({1});
  z.data = {0.0};
  y.data = {1.0};
  CHECK(nn::bce_with_logits(z, y) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  z.data = {40.0};
  CHECK(nn::bce_with_logits(z, y) < 1e-15);

  z.data = {-1000.0};
  y.data = {0.0};
  CHECK(nn::bce_with_logits(z, y) == 0.0);
  Tensor<double> g(z.shape);
  nn::bce_with_logits_backward(z, y, 1.0, &g);
  CHECK(std::isfinite(g.data[0]));
}

TEST_CASE("bce_with_logits: non-negative everywhere") {
  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    Tensor<double> z({4}), y({4});
    for (auto& v : z.data) v = rng.uniform(-50.0, 50.0);
    for (auto& v : y.data) v = rng.uniform01() < 0.5 ? 0.0 : 1.0;
    CHECK(nn::bce_with_logits(z, y) >= 0.0);
  }
}

TEST_CASE("cosine_lr: endpoints, midpoint, monotone non-increasing") {
  nn::TrainConfig cfg;
  CHECK(nn::cosine_lr(0, cfg) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(nn::cosine_lr(cfg.epochs, cfg) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(nn::cosine_lr(15, cfg) == doctest::Approx(5.05e-4).epsilon(1e-9));
  double prev = nn::cosine_lr(0, cfg);
  for (int t = 1; t <= cfg.epochs; ++t) {
    const double lr = nn::cosine_lr(t, cfg);
    CHECK(lr <= prev);
    CHECK(lr >= cfg.lr_min);
    CHECK(lr <= cfg.lr_max);
    prev = lr;
  }
  CHECK_THROWS_AS(nn::cosine_lr(-1, cfg), Error);
  CHECK_THROWS_AS(nn::cosine_lr(cfg.epochs + 1, cfg), Error);
}

TEST_CASE("adam_step: zero gradient leaves parameters unchanged") {
  Tensor<double> p = Tensor<double>::full({4}, 1.25);
  std::vector<double> g(4, 0.0);
  nn::AdamState<double> st;
  nn::adam_step(p, g, st, 1e-3);
  for (double v : p.data) CHECK(v == 1.25);
}

TEST_CASE("adam_step: first step size approximates lr") {
  Tensor<double> p = Tensor<double>::full({1}, 1.0);
  std::vector<double> g{0.1};
  nn::AdamState<double> st;
  nn::adam_step(p, g, st, 1e-3);
  CHECK(p.data[0] == doctest::Approx(0.999).epsilon(1e-6));
}

TEST_CASE("adam_step: identical seeds give bit-identical trajectories") {
  const auto run = [] {
    Rng rng(99);
    Tensor<float> p = Tensor<float>::randn({16}, rng, 1.0);
    nn::AdamState<float> st;
    for (int step = 0; step < 25; ++step) {
      std::vector<float> g(16);
      for (auto& v : g) v = static_cast<float>(rng.uniform(-1.0, 1.0));
      nn::adam_step(p, g, st, 1e-3);
    }
    return p.data;
  };
  CHECK(run() == run());
}

TEST_CASE("avgpool2x2: ceil-mode sizes and edge-window averaging") {
  Tensor<double> x({1, 1, 3, 3});
  x.data = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  const Tensor<double> y = nn::avgpool2x2(x);
  CHECK(y.shape == std::vector<int>{1, 1, 2, 2});
  CHECK(y.data[0] == doctest::Approx(3.0));   // (1+2+4+5)/4
  CHECK(y.data[1] == doctest::Approx(4.5));   // (3+6)/2
  CHECK(y.data[2] == doctest::Approx(7.5));   // (7+8)/2
  CHECK(y.data[3] == doctest::Approx(9.0));   // lone corner
  // Size-1 dims survive.
  Tensor<double> tiny({1, 1, 1, 1});
  tiny.data = {5.0};
  CHECK(nn::avgpool2x2(tiny).shape == std::vector<int>{1, 1, 1, 1});
}

TEST_CASE("adaptive_avgpool_w: down- and up-sampling cover every column") {
  Tensor<double> x({1, 1, 1, 6});
  x.data = {1, 2, 3, 4, 5, 6};
  const Tensor<double> down = nn::adaptive_avgpool_w(x, 3);
  CHECK(down.data == std::vector<double>{1.5, 3.5, 5.5});
  const Tensor<double> up = nn::adaptive_avgpool_w(down, 6);
  CHECK(up.dim(3) == 6);
  const Tensor<double> same = nn::adaptive_avgpool_w(x, 6);
  CHECK(same.data == x.data);
}

TEST_CASE("deterministic forward: same inputs, same bits") {
  Rng rng(12);
  Tensor<float> x = Tensor<float>::randn({2, 3, 9, 9}, rng, 1.0);
  Tensor<float> k = Tensor<float>::randn({4, 3, 3, 3}, rng, 0.5);
  const Tensor<float> a = nn::conv2d(x, k, 2, 1);
  const Tensor<float> b = nn::conv2d(x, k, 2, 1);
  CHECK(a.data == b.data);
}
