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
#include <span>
#include <vector>

namespace mdma {

/// out[i] = 1 iff values[i] > mean(values). A constant input gives all
/// zeros; the equality test makes that exact instead of depending on how
/// the sum of identical values rounds.
inline std::vector<std::uint8_t> threshold_above_mean(std::span<const double> values) {
  std::vector<std::uint8_t> out(values.size(), 0);
  if (values.empty()) return out;
  bool constant = true;
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    constant = constant && v == values[0];
  }
  if (constant) return out;
  const double mean = sum / static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] > mean ? 1 : 0;
  return out;
}

}  // namespace mdma
