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

#include <cstddef>
#include <span>

#include "mdma/scenario.hpp"
#include "mdma/token_layout.hpp"

namespace mdma {

/// |a & b| / |a | b|; two empty masks score 1.
double mask_iou(const BinaryMatrix& a, const BinaryMatrix& b);
double mask_iou(const SpatialMask& a, const SpatialMask& b);

inline constexpr std::size_t kMagnitudeBins = 32;
inline constexpr std::size_t kDirectionBins = 16;
inline constexpr double kMinDirectionMagnitude = 1e-6;

struct FlowFidelity {
  double magnitude = 0.0;  // histogram intersection of flow magnitudes
  double direction = 0.0;  // histogram intersection of flow directions
  double score = 0.0;      // (magnitude + direction) / 2
};

/// Flow Fidelity between a generated and a reference motion, each given
/// as flow fields with one mask per field (mask i selects cells of flow i).
///
/// Magnitudes inside the masks are binned into kMagnitudeBins uniform bins
/// over the range pooled across both sides; directions of vectors longer
/// than kMinDirectionMagnitude into kDirectionBins equal angular bins on
/// [-pi, pi). Each side's histogram is normalized by its own count and the
/// two are compared by histogram intersection. The direction term is 1 when
/// neither side has a moving cell and 0 when exactly one has.
///
/// Throws std::invalid_argument when either side's masks select no cell or
/// when shapes disagree.
FlowFidelity flow_fidelity(std::span<const FlowField> flow_gen, std::span<const FlowField> flow_ref,
                           std::span<const SpatialMask> mask_gen,
                           std::span<const SpatialMask> mask_ref);

FlowFidelity flow_fidelity(const FlowField& flow_gen, const FlowField& flow_ref,
                           const BinaryMatrix& mask_gen, const BinaryMatrix& mask_ref);

}  // namespace mdma
