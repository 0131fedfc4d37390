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
#include <vector>

#include "mdma/attention.hpp"
#include "mdma/token_layout.hpp"

namespace mdma {

/// Text tokens whose queries stand for one object during training.
struct TextQuerySelection {
  std::size_t object = 0;
  std::vector<std::size_t> text_token_indices;  // relative to the text segment
};

/// Raw per-video-token score: Q_y . K_v^T / sqrt(d), averaged over the
/// selected text tokens and over heads. Length n_video.
std::vector<double> training_score_map(const ProjectedTokens& tokens,
                                       const TextQuerySelection& selection,
                                       const TokenLayout& layout);

/// Training-stage object mask: the score map thresholded strictly above
/// its mean, reshaped to one SpatialMask per frame.
MaskSequence extract_training_mask(const ProjectedTokens& tokens,
                                   const TextQuerySelection& selection,
                                   const TokenLayout& layout);

}  // namespace mdma
