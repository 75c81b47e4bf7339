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

#include "fcv/fft.hpp"

#include <cmath>

namespace fcv {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

Fft::Fft(size_t n) : n_(n) {
  if (!is_pow2(n)) throw Error("fft: size must be a power of two");
  rev_.resize(n);
  size_t bits = 0;
  while ((size_t{1} << bits) < n) ++bits;
  for (size_t i = 0; i < n; ++i) {
    size_t r = 0;
    for (size_t b = 0; b < bits; ++b) {
      if (i & (size_t{1} << b)) r |= size_t{1} << (bits - 1 - b);
    }
    rev_[i] = r;
  }
  // Twiddles per stage: for stage length len, the first len/2 roots of
  // exp(-2*pi*i*k/len). Stored back to back.
  tw_.reserve(n);
  for (size_t len = 2; len <= n; len <<= 1) {
    for (size_t k = 0; k < len / 2; ++k) {
      const double ang = -kTwoPi * static_cast<double>(k) / static_cast<double>(len);
      tw_.emplace_back(std::cos(ang), std::sin(ang));
    }
  }
}

void Fft::transform(std::vector<std::complex<double>>& buf, bool inv) const {
  if (buf.size() != n_) throw Error("fft: buffer size mismatch");
  for (size_t i = 0; i < n_; ++i) {
    if (rev_[i] > i) std::swap(buf[i], buf[rev_[i]]);
  }
  size_t tw_off = 0;
  for (size_t len = 2; len <= n_; len <<= 1) {
    const size_t half = len / 2;
    for (size_t start = 0; start < n_; start += len) {
      for (size_t k = 0; k < half; ++k) {
        std::complex<double> w = tw_[tw_off + k];
        if (inv) w = std::conj(w);
        const std::complex<double> a = buf[start + k];
        const std::complex<double> b = buf[start + k + half] * w;
        buf[start + k] = a + b;
        buf[start + k + half] = a - b;
      }
    }
    tw_off += half;
  }
  if (inv) {
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& v : buf) v *= scale;
  }
}

void Fft::forward(std::vector<std::complex<double>>& buf) const { transform(buf, false); }
void Fft::inverse(std::vector<std::complex<double>>& buf) const { transform(buf, true); }

}  // namespace fcv
