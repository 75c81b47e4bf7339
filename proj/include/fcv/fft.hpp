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

#ifndef FCV_FFT_HPP_
#define FCV_FFT_HPP_

#include <complex>
#include <cstddef>
#include <vector>

#include "fcv/errors.hpp"

namespace fcv {

// Iterative radix-2 complex FFT with precomputed twiddles. A plan is cheap
// to build, immutable once built, and safe to share across threads.
class Fft {
 public:
  explicit Fft(size_t n);

  size_t size() const { return n_; }

  // In-place transform; buf.size() must equal size().
  void forward(std::vector<std::complex<double>>& buf) const;
  void inverse(std::vector<std::complex<double>>& buf) const;

 private:
  void transform(std::vector<std::complex<double>>& buf, bool inv) const;

  size_t n_ = 0;
  std::vector<size_t> rev_;
  std::vector<std::complex<double>> tw_;  // twiddles for all stages, flattened
};

inline bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }
size_t next_pow2(size_t n);

}  // namespace fcv

#endif  // FCV_FFT_HPP_
