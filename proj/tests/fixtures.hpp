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

// Shared test fixtures and conversions between library types and the
// brute-force oracles.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "mdma/attention.hpp"
#include "mdma/mdma_mask.hpp"
#include "mdma/rmpm.hpp"
#include "mdma/rng.hpp"
#include "mdma/simulate.hpp"
#include "mdma/token_layout.hpp"
#include "oracle/naive.hpp"

namespace fixtures {

inline mdma::BinaryMatrix random_grid(mdma::Rng& rng, std::size_t h, std::size_t w, double p) {
  mdma::BinaryMatrix m(h, w);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) m.set(r, c, rng.uniform() < p);
  return m;
}

// K random masks over L frames; with `disjoint` every cell has at most one owner.
inline mdma::ObjectMasks random_object_masks(mdma::Rng& rng, const mdma::TokenLayout& lay,
                                             bool disjoint, double p = 0.35) {
  const std::size_t K = lay.n_objects();
  mdma::ObjectMasks out(K);
  for (std::size_t l = 0; l < lay.frames(); ++l) {
    std::vector<mdma::BinaryMatrix> grids;
    if (disjoint) {
      grids.assign(K, mdma::BinaryMatrix(lay.grid_h(), lay.grid_w()));
      for (std::size_t r = 0; r < lay.grid_h(); ++r)
        for (std::size_t c = 0; c < lay.grid_w(); ++c)
          if (rng.uniform() < p * static_cast<double>(K)) grids[rng.below(K)].set(r, c, true);
    } else {
      for (std::size_t k = 0; k < K; ++k) grids.push_back(random_grid(rng, lay.grid_h(), lay.grid_w(), p));
    }
    for (std::size_t k = 0; k < K; ++k) out[k].push_back({l, grids[k]});
  }
  return out;
}

struct LayoutLimits {
  std::size_t max_k = 4, max_dm = 4, max_text = 16, max_grid = 6, max_frames = 4;
};

// Random valid layout: disjoint non-empty spans assigned to objects in a
// shuffled order, with gaps of appearance text between them.
inline mdma::TokenLayout random_layout(mdma::Rng& rng, const LayoutLimits& lim = {},
                                       std::size_t fixed_k = 0) {
  const std::size_t K = fixed_k ? fixed_k : 1 + rng.below(lim.max_k);
  const std::size_t n_text = K + rng.below(lim.max_text - K + 1);
  std::size_t spare = n_text - K;
  std::vector<mdma::IndexSpan> ordered;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t gap = rng.below(std::min<std::size_t>(spare, 2) + 1);
    spare -= gap;
    pos += gap;
    const std::size_t extra = rng.below(std::min<std::size_t>(spare, 2) + 1);
    spare -= extra;
    ordered.push_back({pos, pos + 1 + extra});
    pos += 1 + extra;
  }
  for (std::size_t i = K; i > 1; --i) std::swap(ordered[i - 1], ordered[rng.below(i)]);
  return mdma::build_layout(n_text, 1 + rng.below(lim.max_dm), K, 1 + rng.below(lim.max_frames),
                            1 + rng.below(lim.max_grid), 1 + rng.below(lim.max_grid), ordered);
}

inline oracle::Layout to_oracle(const mdma::TokenLayout& lay) {
  oracle::Layout o{lay.n_text(), lay.motion_per_object(), lay.n_objects(), lay.frames(),
                   lay.grid_h(), lay.grid_w(), {}};
  for (const auto& s : lay.text_motion_spans()) o.spans.emplace_back(s.begin, s.end);
  return o;
}

inline oracle::Grid to_oracle(const mdma::BinaryMatrix& m) {
  oracle::Grid g(m.rows(), std::vector<int>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  return g;
}

inline std::vector<std::vector<oracle::Grid>> to_oracle(const mdma::ObjectMasks& masks) {
  std::vector<std::vector<oracle::Grid>> out;
  for (const auto& seq : masks) {
    out.emplace_back();
    for (const auto& f : seq) out.back().push_back(to_oracle(f.grid));
  }
  return out;
}

inline oracle::Heads to_oracle(const mdma::Array3& a) {
  oracle::Heads h(a.d0, oracle::Mat(a.d1, std::vector<oracle::Real>(a.d2)));
  for (std::size_t i = 0; i < a.d0; ++i)
    for (std::size_t j = 0; j < a.d1; ++j)
      for (std::size_t k = 0; k < a.d2; ++k) h[i][j][k] = a(i, j, k);
  return h;
}

inline std::vector<oracle::Mat> to_oracle(const mdma::FeatureSequence& f) {
  std::vector<oracle::Mat> out(f.frames());
  for (std::size_t l = 0; l < f.frames(); ++l)
    for (std::size_t i = 0; i < f.cells(); ++i) {
      const auto cell = f.cell(l, i);
      out[l].emplace_back(cell.begin(), cell.end());
    }
  return out;
}

inline std::vector<int> flatten(const mdma::BinaryMatrix& m) {
  return {m.data().begin(), m.data().end()};
}

inline bool same_bits(const mdma::BinaryMatrix& m, const oracle::Bits& b) {
  if (m.rows() != b.size()) return false;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (m(r, c) != b[r][c]) return false;
  return true;
}

inline mdma::FeatureSequence random_features(mdma::Rng& rng, std::size_t frames, std::size_t h,
                                             std::size_t w, std::size_t channels) {
  mdma::FeatureSequence f(frames, h, w, channels);
  for (std::size_t l = 0; l < frames; ++l)
    for (double& x : f.frame(l)) x = rng.normal();
  return f;
}

// Drops the last object from a layout and its masks. Motion tokens of the
// dropped object sit at the end of the motion segment, so small index i maps
// to i below the small video offset and to i + d_m from there on.
struct Shrunk {
  mdma::TokenLayout layout;
  mdma::ObjectMasks masks;
  std::size_t big_index(std::size_t i) const {
    return i < layout.video_offset() ? i : i + layout.motion_per_object();
  }
};

inline Shrunk drop_last_object(const mdma::TokenLayout& big, const mdma::ObjectMasks& masks) {
  auto spans = big.text_motion_spans();
  spans.pop_back();
  Shrunk s{mdma::build_layout(big.n_text(), big.motion_per_object(), big.n_objects() - 1,
                              big.frames(), big.grid_h(), big.grid_w(), spans),
           mdma::ObjectMasks(masks.begin(), masks.end() - 1)};
  return s;
}

inline std::size_t segment_base(const mdma::TokenLayout& lay, std::size_t seg) {
  return seg == 0 ? 0 : seg == 1 ? lay.motion_offset() : lay.video_offset();
}

// True when every 1 of the small block is also 1 at the mapped position of
// the big block. `rows` limits the check to the given block-relative rows.
inline bool block_monotone(const mdma::AttentionMask& small, const mdma::AttentionMask& big,
                           mdma::Block b, const Shrunk& map,
                           const std::vector<std::size_t>* rows = nullptr) {
  const std::size_t rs = static_cast<std::size_t>(b) / 3, cs = static_cast<std::size_t>(b) % 3;
  const auto& sm = small.block(b);
  const auto& bm = big.block(b);
  std::vector<std::size_t> all;
  if (!rows) {
    for (std::size_t r = 0; r < sm.rows(); ++r) all.push_back(r);
    rows = &all;
  }
  for (std::size_t r : *rows)
    for (std::size_t c = 0; c < sm.cols(); ++c) {
      if (!sm(r, c)) continue;
      const std::size_t br = map.big_index(segment_base(small.layout(), rs) + r) -
                             segment_base(big.layout(), rs);
      const std::size_t bc = map.big_index(segment_base(small.layout(), cs) + c) -
                             segment_base(big.layout(), cs);
      if (!bm(br, bc)) return false;
    }
  return true;
}

// Text rows (block-relative) that are motion-text in `lay`.
inline std::vector<std::size_t> motion_text_rows(const mdma::TokenLayout& lay) {
  std::vector<std::size_t> rows;
  for (std::size_t p = 0; p < lay.n_text(); ++p)
    if (lay.text_owner(p) >= 0) rows.push_back(p);
  return rows;
}

// Seed-42 disentanglement fixture: two objects, 6 text tokens with
// motion-text spans {2} and {4}, two motion tokens each, 2 frames on a 4x4
// grid. Object 0 owns the left half of every frame, object 1 the right.
struct TwoObjectFixture {
  mdma::TokenLayout layout;
  mdma::ObjectMasks masks;
  mdma::ProjectedTokens tokens;
};

inline TwoObjectFixture two_object_fixture(std::uint64_t seed = 42) {
  TwoObjectFixture fx;
  fx.layout = mdma::build_layout(6, 2, 2, 2, 4, 4, {{2, 3}, {4, 5}});
  fx.masks.resize(2);
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t k = 0; k < 2; ++k) {
      mdma::BinaryMatrix g(4, 4);
      for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 2 * k; c < 2 * k + 2; ++c) g.set(r, c, true);
      fx.masks[k].push_back({l, g});
    }
  fx.tokens = mdma::random_tokens(fx.layout, 4, 8, seed);
  return fx;
}

// Random Q/K/V with the given shape.
inline mdma::ProjectedTokens random_projected(mdma::Rng& rng, std::size_t heads, std::size_t n,
                                              std::size_t d) {
  mdma::ProjectedTokens t{mdma::Array3(heads, n, d), mdma::Array3(heads, n, d),
                          mdma::Array3(heads, n, d)};
  for (auto* a : {&t.q, &t.k, &t.v})
    for (double& x : a->data) x = rng.normal();
  return t;
}

}  // namespace fixtures
