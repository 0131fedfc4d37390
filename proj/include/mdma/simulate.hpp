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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdma/attention.hpp"
#include "mdma/mdma_mask.hpp"
#include "mdma/rmpm.hpp"
#include "mdma/scenario.hpp"

namespace mdma {

/// Largest absolute change of any output row belonging to another object's
/// video, motion or motion-text tokens when the key/value rows of object
/// `object`'s motion and motion-text tokens are replaced by random values.
/// One replacement per trial; the maximum over trials is returned.
double leak_probe(const ProjectedTokens& tokens, const AttentionMask& mask, std::size_t object,
                  std::size_t trials, std::uint64_t seed, MaskMode mode = MaskMode::kNegInf);

/// Random Q/K/V for a layout (standard normal entries).
ProjectedTokens random_tokens(const TokenLayout& layout, std::size_t heads, std::size_t head_dim,
                              std::uint64_t seed);

struct RpmConfig {
  std::size_t window = 2;
  double alpha = 0.05;
  bool dynamic = true;
  unsigned jobs = 1;
};

struct SimulateOptions {
  MaskMode mode = MaskMode::kNegInf;
  MaskOptions mask_options;
  std::size_t heads = 4;
  std::size_t head_dim = 8;
  std::size_t leak_trials = 1;
};

struct StepRecord {
  std::size_t step = 0;
  bool propagated = false;
  std::optional<double> difference;      // vs previous step's tracks
  std::vector<std::vector<double>> iou;  // [object][frame] vs ground truth
  std::vector<double> mean_iou;          // [object]
  double leak = 0.0;
};

struct Report {
  std::string tool_version;
  std::string config_json;  // echo of every input that shaped the run
  std::vector<StepRecord> steps;
  std::optional<std::size_t> frozen_step;
  std::size_t propagation_calls = 0;
  double leak_max = 0.0;
  std::vector<std::optional<double>> flow_fidelity;  // [object]
  std::vector<MaskTrack> final_tracks;
};

/// Runs the inference path over every denoising step of the scenario:
/// propagate (or reuse frozen) masks, build the inference mask from them,
/// score IoU against ground truth and probe for cross-object leakage.
Report simulate(const Scenario& scenario, const RpmConfig& rpm, const SimulateOptions& options);

std::string report_to_json(const Report& report);

}  // namespace mdma
