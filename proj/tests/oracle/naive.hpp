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

// Brute-force reference implementations used only by tests. Everything is
// written from the formulas with explicit loops in long double and shares
// no code with the library.

#include <cstddef>
#include <utility>
#include <vector>

namespace oracle {

using Real = long double;
using Bits = std::vector<std::vector<int>>;          // [row][col]
using Grid = std::vector<std::vector<int>>;          // [row][col] of 0/1
using Mat = std::vector<std::vector<Real>>;          // [row][col]
using Heads = std::vector<Mat>;                      // [head][token][channel]

struct Layout {
  std::size_t n_text, d_m, K, L, H, W;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // [begin, end) per object
};

/// Full attention mask by classifying every (query, key) pair directly.
/// masks[k][l] is object k's grid at frame l.
Bits mask(const Layout& lay, const std::vector<std::vector<Grid>>& masks, bool training,
          bool literal_v2v, bool literal_t2v);

/// Scores, masked softmax and outputs by triple loops.
/// mode: 0 = mul_logits, 1 = neg_inf, 2 = mul_probs.
Heads scores(const Heads& q, const Heads& k);
Heads probabilities(const Heads& scores, const Bits& mask, int mode);
Heads attend(const Heads& q, const Heads& k, const Heads& v, const Bits& mask, int mode);

/// Training-stage mask: s[q] = mean over heads and selected text p of
/// q_p . k_q / sqrt(d); bit = s > mean(s). Returns n_video bits.
std::vector<int> training_mask(const Heads& q, const Heads& k, const std::vector<std::size_t>& sel,
                               std::size_t video_offset, std::size_t n_video);

/// features[l][cell][channel]; first mask flattened over cells.
/// Returns masks[l][cell] for every frame.
std::vector<std::vector<int>> propagate(const std::vector<Mat>& features,
                                        const std::vector<int>& first, std::size_t window);

/// Correlation of frame `cur` against anchors given as (features, mask).
Mat correlation(const Mat& cur, const std::vector<std::pair<Mat, std::vector<int>>>& anchors);

/// Flow Fidelity from raw vectors: gen/ref lists of (dx, dy) inside the masks.
struct FF {
  Real magnitude, direction, score;
};
FF flow_fidelity(const std::vector<std::pair<double, double>>& gen,
                 const std::vector<std::pair<double, double>>& ref);

}  // namespace oracle
