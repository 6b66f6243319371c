// Copyright 2026 The rlmesh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RLMESH_CORE_RNG_HPP_
#define RLMESH_CORE_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace rlmesh {

// splitmix64 finalizer; used to derive independent seeds from one another.
inline uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t HashCombine(uint64_t seed, uint64_t stream) {
  return SplitMix64(seed ^ SplitMix64(stream));
}

uint64_t HashString(std::string_view s);

// Deterministic RNG. All transforms are hand-rolled on top of mt19937_64 so
// draw sequences do not depend on the standard library's distribution
// implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), engine_(seed) {}

  uint64_t seed() const { return seed_; }

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1).
  double Uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double UniformRange(double lo, double hi) {
    return lo + (hi - lo) * Uniform01();
  }

  // Uniform in {0, ..., n-1}; n must be >= 1.
  uint64_t UniformInt(uint64_t n) {
    return static_cast<uint64_t>(Uniform01() * static_cast<double>(n)) % n;
  }

  // Index drawn proportionally to non-negative weights. The weights need not
  // be normalized; total must be positive.
  size_t Categorical(std::span<const double> weights);

  double Exponential(double mean) { return -mean * std::log1p(-Uniform01()); }

  // Independent generator for a named sub-stream of the original seed.
  Rng Split(uint64_t stream) const { return Rng(HashCombine(seed_, stream)); }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace rlmesh

#endif  // RLMESH_CORE_RNG_HPP_
