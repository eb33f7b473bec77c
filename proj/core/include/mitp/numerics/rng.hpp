/*
 * Copyright (c) 2026, The MITP Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <vector>

namespace mitp {

// Counter-based generator: the n-th 64-bit draw is
//   splitmix64_finalize(seed + (n + 1) * 0x9E3779B97F4A7C15)
// so streams depend only on (seed, n) and are identical on every platform.
// Gaussian samples use the Box-Muller transform on two uniform draws in
// (0, 1]; both outputs of a pair are used in order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  double normal(double mean = 0.0, double stddev = 1.0) noexcept;

  // Independent stream derived from this generator's seed and a tag; does
  // not advance this generator.
  Rng fork(std::uint64_t tag) const noexcept;

  // Fisher-Yates shuffle of an index vector.
  void shuffle(std::vector<std::size_t>& items) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64_finalize(std::uint64_t z) noexcept;

}  // namespace mitp
