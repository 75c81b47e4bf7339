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
// Stateful layer wrappers over the functional ops: each caches what its
// backward pass needs and accumulates parameter gradients in Tensor::grad.

#ifndef FCV_LAYERS_HPP_
#define FCV_LAYERS_HPP_

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "fcv/nn.hpp"
#include "fcv/rng.hpp"
#include "fcv/tensor.hpp"

namespace fcv {

// Named handle onto a model tensor. Non-trainable entries are buffers
// (running statistics) that still persist in checkpoints.
template <class T>
struct ParamRef {
  std::string name;
  Tensor<T>* tensor;
  bool trainable;
};

template <class T>
class Conv2dLayer {
 public:
  Conv2dLayer() = default;
  Conv2dLayer(int in_ch, int out_ch, int kernel, int stride, int pad, Rng& rng)
      : stride_(stride), pad_(pad) {
    const double stddev = std::sqrt(2.0 / (static_cast<double>(in_ch) * kernel * kernel));
    w = Tensor<T>::randn({out_ch, in_ch, kernel, kernel}, rng, stddev);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (train) x_ = x;
    return nn::conv2d(x, w, stride_, pad_);
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(x_.shape);
    Tensor<T> gw_local(w.shape);
    nn::conv2d_backward(x_, w, stride_, pad_, gy, &gx, &gw_local);
    for (size_t i = 0; i < w.grad.size(); ++i) w.grad[i] += gw_local.data[i];
    return gx;
  }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".w", &w, true});
  }

  Tensor<T> w;

 private:
  int stride_ = 1, pad_ = 0;
  Tensor<T> x_;
};

template <class T>
class Conv1dLayer {
 public:
  Conv1dLayer() = default;
  Conv1dLayer(int in_ch, int out_ch, int kernel, int stride, int pad, Rng& rng)
      : stride_(stride), pad_(pad) {
    const double stddev = std::sqrt(2.0 / (static_cast<double>(in_ch) * kernel));
    w = Tensor<T>::randn({out_ch, in_ch, kernel}, rng, stddev);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (train) x_ = x;
    return nn::conv1d(x, w, stride_, pad_);
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(x_.shape);
    Tensor<T> gw_local(w.shape);
    nn::conv1d_backward(x_, w, stride_, pad_, gy, &gx, &gw_local);
    for (size_t i = 0; i < w.grad.size(); ++i) w.grad[i] += gw_local.data[i];
    return gx;
  }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".w", &w, true});
  }

  Tensor<T> w;

 private:
  int stride_ = 1, pad_ = 0;
  Tensor<T> x_;
};

template <class T>
class BatchNormLayer {
 public:
  BatchNormLayer() = default;
  explicit BatchNormLayer(int channels) {
    gamma = Tensor<T>::full({channels}, T(1));
    beta = Tensor<T>::zeros({channels});
    running_mean = Tensor<T>::zeros({channels});
    running_var = Tensor<T>::full({channels}, T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    return nn::batchnorm_forward(x, gamma, beta, running_mean, running_var, train,
                                 momentum, eps, train ? &cache_ : nullptr);
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(cache_.x_shape);
    Tensor<T> gg(gamma.shape), gb(beta.shape);
    nn::batchnorm_backward(cache_, gamma, gy, &gx, &gg, &gb);
    for (size_t i = 0; i < gamma.grad.size(); ++i) gamma.grad[i] += gg.data[i];
    for (size_t i = 0; i < beta.grad.size(); ++i) beta.grad[i] += gb.data[i];
    return gx;
  }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".gamma", &gamma, true});
    out.push_back({prefix + ".beta", &beta, true});
    out.push_back({prefix + ".running_mean", &running_mean, false});
    out.push_back({prefix + ".running_var", &running_var, false});
  }

  Tensor<T> gamma, beta, running_mean, running_var;
  double momentum = 0.9;
  double eps = 1e-5;

 private:
  nn::BatchNormCache<T> cache_;
};

template <class T>
class ReluLayer {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (train) x_ = x;
    return nn::relu(x);
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(x_.shape);
    nn::relu_backward(x_, gy, &gx);
    return gx;
  }

 private:
  Tensor<T> x_;
};

template <class T>
class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(int in_dim, int out_dim, Rng& rng) {
    const double stddev = std::sqrt(1.0 / static_cast<double>(in_dim));
    w = Tensor<T>::randn({out_dim, in_dim}, rng, stddev);
    b = Tensor<T>::zeros({out_dim});
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (train) x_ = x;
    return nn::linear(x, w, b);
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(x_.shape);
    Tensor<T> gw(w.shape), gb(b.shape);
    nn::linear_backward(x_, w, gy, &gx, &gw, &gb);
    for (size_t i = 0; i < w.grad.size(); ++i) w.grad[i] += gw.data[i];
    for (size_t i = 0; i < b.grad.size(); ++i) b.grad[i] += gb.data[i];
    return gx;
  }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".w", &w, true});
    out.push_back({prefix + ".b", &b, true});
  }

  Tensor<T> w, b;

 private:
  Tensor<T> x_;
};

// GeM pooling with a learnable exponent, initialized to 3.
template <class T>
class GemPoolLayer {
 public:
  GemPoolLayer() { p = Tensor<T>::full({1}, T(3)); }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (train) {
      x_ = x;
      return nn::gem_pool(x, p.data[0], &cache_);
    }
    return nn::gem_pool<T>(x, p.data[0], nullptr);
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(x_.shape);
    T gp = 0;
    nn::gem_pool_backward(cache_, x_, gy, &gx, &gp);
    p.grad[0] += gp;
    return gx;
  }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".p", &p, true});
  }

  Tensor<T> p;

 private:
  Tensor<T> x_;
  nn::GemCache<T> cache_;
};

template <class T>
class AvgPool2x2Layer {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (train) x_shape_ = x.shape;
    return nn::avgpool2x2(x);
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(x_shape_);
    nn::avgpool2x2_backward(x_shape_, gy, &gx);
    return gx;
  }

 private:
  std::vector<int> x_shape_;
};

// conv -> batchnorm -> relu, the building unit of both backbones.
template <class T>
class ConvBnRelu {
 public:
  ConvBnRelu() = default;
  ConvBnRelu(int in_ch, int out_ch, int stride, Rng& rng)
      : conv(in_ch, out_ch, 3, stride, 1, rng), bn(out_ch) {}

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    return relu_.forward(bn.forward(conv.forward(x, train), train), train);
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    return conv.backward(bn.backward(relu_.backward(gy)));
  }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    conv.collect(prefix + ".conv", out);
    bn.collect(prefix + ".bn", out);
  }

  Conv2dLayer<T> conv;
  BatchNormLayer<T> bn;

 private:
  ReluLayer<T> relu_;
};

template <class T>
class Conv1dBnRelu {
 public:
  Conv1dBnRelu() = default;
  Conv1dBnRelu(int in_ch, int out_ch, int kernel, int stride, int pad, Rng& rng)
      : conv(in_ch, out_ch, kernel, stride, pad, rng), bn(out_ch) {}

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    return relu_.forward(bn.forward(conv.forward(x, train), train), train);
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    return conv.backward(bn.backward(relu_.backward(gy)));
  }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    conv.collect(prefix + ".conv", out);
    bn.collect(prefix + ".bn", out);
  }

  Conv1dLayer<T> conv;
  BatchNormLayer<T> bn;

 private:
  ReluLayer<T> relu_;
};

template <class T>
inline std::vector<Tensor<T>*> trainable_of(std::vector<ParamRef<T>>& refs) {
  std::vector<Tensor<T>*> out;
  for (auto& r : refs) {
    if (r.trainable) out.push_back(r.tensor);
  }
  return out;
}

}  // namespace fcv

#endif  // FCV_LAYERS_HPP_
