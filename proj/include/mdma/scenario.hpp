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

// Synthetic ground truth standing in for real videos: moving rectangular
// blobs on a latent grid with per-cell feature signatures, exact flows and
// exact object masks, and a per-step noise schedule that mimics denoising.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mdma/rmpm.hpp"
#include "mdma/token_layout.hpp"

namespace mdma {

struct MotionSpec {
  enum class Kind { kStatic, kTranslate, kRotate };

  Kind kind = Kind::kStatic;
  // Blob rectangle at frame 0: columns [x, x + w), rows [y, y + h).
  int x = 0, y = 0;
  int w = 1, h = 1;
  // kTranslate: cells moved per frame along columns (dx) and rows (dy).
  int dx = 0, dy = 0;
  // kRotate: degrees per frame about the blob centre (counter-clockwise in
  // image coordinates, i.e. rows growing downwards).
  double degrees = 0.0;

  std::string label() const;
};

/// Per-cell flow vectors (dx along columns, dy along rows).
struct FlowField {
  std::size_t grid_h = 0, grid_w = 0;
  std::vector<double> dx, dy;

  FlowField() = default;
  FlowField(std::size_t h, std::size_t w) : grid_h(h), grid_w(w), dx(h * w, 0.0), dy(h * w, 0.0) {}
};

struct ScenarioConfig {
  std::uint64_t seed = 11;
  std::size_t objects = 2;
  std::size_t frames = 8;
  std::size_t grid_h = 16, grid_w = 16;
  std::size_t steps = 10;
  std::size_t channels = 16;
  std::size_t motion_per_object = 2;
  // Noise standard deviation at the first step; decays linearly to zero at
  // `convergence_step` (1-based) and stays zero afterwards. A value <= 1
  // disables noise.
  double noise = 1.5;
  std::size_t convergence_step = 3;
  // Standard deviation of the per-cell signature added to an object's
  // embedding; moves with the object.
  double jitter = 0.1;
  bool disjoint = true;
  // One spec per object; empty means default_motion_specs().
  std::vector<MotionSpec> motions;
};

struct Scenario {
  ScenarioConfig config;
  TokenLayout layout;
  std::vector<FeatureSequence> features_per_step;
  std::vector<MaskTrack> gt_masks;
  std::vector<FlowField> flows;  // frames - 1 entries, frame l -> l + 1
  std::vector<std::string> motion_labels;
};

/// Objects stacked in horizontal bands, alternately translating right and
/// left by one cell per frame when the blob has room, otherwise static.
std::vector<MotionSpec> default_motion_specs(std::size_t objects, std::size_t frames,
                                             std::size_t grid_h, std::size_t grid_w);

/// Analytic mask of a blob at frame l.
BinaryMatrix blob_mask(const MotionSpec& spec, std::size_t frame, std::size_t grid_h,
                       std::size_t grid_w);

/// Noise standard deviation applied at 0-based step index `step`.
double noise_level(const ScenarioConfig& config, std::size_t step);

/// Throws std::invalid_argument when an object leaves the grid, when
/// `disjoint` is set and two blobs overlap at frame 0, or on bad counts.
Scenario generate_scenario(const ScenarioConfig& config);

// Scenario specs from JSON: {"seed":..., "objects": [{"kind": "translate",
// "x":..,"y":..,"w":..,"h":..,"dx":..,"dy":..}, ...], ...}.
ScenarioConfig scenario_config_from_json(const std::string& text, ScenarioConfig base);

// (frames - 1, H, W, 2) tensor <-> flows.
Tensor flows_to_tensor(const std::vector<FlowField>& flows);
std::vector<FlowField> flows_from_tensor(const Tensor& t);

}  // namespace mdma
