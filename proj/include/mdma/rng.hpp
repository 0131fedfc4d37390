// Copyright 2026 The mdma-kit Authors
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

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mdma {

/// Deterministic generator used for every fixture and scenario.
///
/// Algorithm "mt19937_64-v1":
///   raw draws   std::mt19937_64 seeded with the 64-bit seed (the engine's
///               output sequence is fixed by the C++ standard)
///   uniform()   (raw >> 11) * 2^-53, in [0, 1)
///   normal()    Box-Muller on two uniforms u1, u2 with u1 replaced by
///               1 - u1 so the log argument is in (0, 1]; returns
///               sqrt(-2 ln u1) cos(2 pi u2); the sine half is discarded
///   below(n)    floor(uniform() * n)
///
/// std distributions are avoided because their output is
/// implementation-defined.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64-v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mdma
