// Copyright 2026 The Unifwatch Authors
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

// Splittable, platform-independent pseudo-random generator.
//
// The state generator is xoshiro256** (Blackman & Vigna). Seeding and child
// derivation go through SplitMix64, so a generator is fully identified by its
// 64-bit seed and `child(i)` depends only on (seed, i), never on how many
// values the parent has produced. All derived distributions in this library
// (uniform integers, Poisson, binomial) are built on top of `next_u64()` with
// documented algorithms, so identical seeds give bit-identical results across
// platforms and standard libraries.

#ifndef UNIFWATCH_RNG_H_
#define UNIFWATCH_RNG_H_

#include <array>
#include <cstdint>
#include <limits>

namespace unifwatch {

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  // Independent generator keyed by (seed, index).
  Rng child(std::uint64_t index) const;

  std::uint64_t next_u64();
  result_type operator()() { return next_u64(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();

  // Uniform on {0, ..., bound - 1}; bound must be positive. Lemire's
  // multiply-and-reject method, unbiased.
  std::uint64_t uniform_below(std::uint64_t bound);

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
};

// SplitMix64 finalizer; exposed for hashing seeds in the harness.
std::uint64_t splitmix64_mix(std::uint64_t x);

}  // namespace unifwatch

#endif  // UNIFWATCH_RNG_H_
