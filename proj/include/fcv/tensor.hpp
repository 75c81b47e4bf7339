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

#ifndef FCV_TENSOR_HPP_
#define FCV_TENSOR_HPP_

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "fcv/errors.hpp"
#include "fcv/rng.hpp"

namespace fcv {

// Dense row-major n-d array. `grad`, when allocated, always matches `data`
// in length. double instantiations back the gradient checks, float ones
// back training and checkpoints.
template <class T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;
  std::vector<T> grad;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel()), T(0));
  }

  int64_t numel() const {
    if (shape.empty()) return 0;
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  int dim(size_t i) const { return shape[i]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  void require_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
  void zero_grad() { grad.assign(grad.size(), T(0)); }
  bool has_grad() const { return grad.size() == data.size() && !data.empty(); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, T value) {
    Tensor t(std::move(s));
    for (auto& v : t.data) v = value;
    return t;
  }
  static Tensor randn(std::vector<int> s, Rng& rng, double stddev) {
    Tensor t(std::move(s));
    for (auto& v : t.data) v = static_cast<T>(rng.normal() * stddev);
    return t;
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  std::string shape_str() const {
    std::ostringstream ss;
    ss << "[";
    for (size_t i = 0; i < shape.size(); ++i) ss << (i ? "," : "") << shape[i];
    ss << "]";
    return ss.str();
  }
};

template <class T>
inline void check_shape(const Tensor<T>& t, const std::vector<int>& want,
                        const char* what) {
  if (t.shape != want) {
    throw ShapeMismatch(std::string(what) + ": got " + t.shape_str());
  }
}

}  // namespace fcv

#endif  // FCV_TENSOR_HPP_
