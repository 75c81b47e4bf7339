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

#ifndef FCV_RNG_HPP_
#define FCV_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace fcv {

// splitmix64 finalizer; used to derive child stream seeds.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seeded generator with all distributions implemented in-house so a given
// seed produces the same draws on every platform and standard library.
// Not thread-safe; each worker owns its own (forked) instance.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), eng_(seed) {}

  uint64_t seed() const { return seed_; }
  uint64_t next() { return eng_(); }

  // Uniform in [0, bound), bound > 0. Rejection sampling, no modulo bias.
  uint64_t below(uint64_t bound) {
    const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % bound);
    uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
  }

  // Uniform integer in [lo, hi], inclusive on both ends.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
  }

  // Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Standard normal, Box-Muller. The second variate of the pair is dropped
  // to keep the draw count per call fixed.
  double normal() {
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream. Forks depend on the parent's seed only, not on
  // how many draws the parent has made.
  Rng fork(uint64_t tag) const { return Rng(mix64(seed_ ^ mix64(tag))); }
  Rng fork(uint64_t tag_a, uint64_t tag_b) const {
    return Rng(mix64(mix64(seed_ ^ mix64(tag_a)) ^ mix64(tag_b)));
  }

 private:
  uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace fcv

#endif  // FCV_RNG_HPP_
