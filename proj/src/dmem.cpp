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

#include "mdma/dmem.hpp"

#include <cmath>
#include <stdexcept>

#include "mdma/threshold.hpp"

namespace mdma {

std::vector<double> training_score_map(const ProjectedTokens& tokens,
                                       const TextQuerySelection& selection,
                                       const TokenLayout& layout) {
  tokens.validate();
  if (selection.text_token_indices.empty())
    throw std::invalid_argument("dmem: empty text selection");
  if (tokens.tokens() != layout.total())
    throw std::invalid_argument("dmem: token count does not match layout");
  for (auto p : selection.text_token_indices)
    if (p >= layout.n_text()) throw std::invalid_argument("dmem: selected index outside text segment");
  if (selection.object >= layout.n_objects())
    throw std::invalid_argument("dmem: object index out of range");

  const double scale = 1.0 / std::sqrt(static_cast<double>(tokens.head_dim()));
  const double count =
      static_cast<double>(tokens.heads() * selection.text_token_indices.size());
  std::vector<double> s(layout.n_video());
  for (std::size_t q = 0; q < layout.n_video(); ++q) {
    const std::size_t key = layout.video_offset() + q;
    double acc = 0.0;
    for (std::size_t h = 0; h < tokens.heads(); ++h) {
      auto k = tokens.k.row(h, key);
      for (auto p : selection.text_token_indices) {
        auto qy = tokens.q.row(h, p);
        double d = 0.0;
        for (std::size_t c = 0; c < qy.size(); ++c) d += qy[c] * k[c];
        acc += d * scale;
      }
    }
    s[q] = acc / count;
  }
  return s;
}

MaskSequence extract_training_mask(const ProjectedTokens& tokens,
                                   const TextQuerySelection& selection,
                                   const TokenLayout& layout) {
  const auto bits = threshold_above_mean(training_score_map(tokens, selection, layout));
  MaskSequence out;
  const std::size_t cells = layout.grid_cells();
  for (std::size_t f = 0; f < layout.frames(); ++f) {
    SpatialMask m{f, BinaryMatrix(layout.grid_h(), layout.grid_w())};
    for (std::size_t i = 0; i < cells; ++i)
      m.grid.set(i / layout.grid_w(), i % layout.grid_w(), bits[f * cells + i] != 0);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace mdma
