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

#include "mdma/mdma_mask.hpp"

#include <sstream>
#include <stdexcept>

namespace mdma {
namespace {

void check_object_masks(const TokenLayout& layout, const ObjectMasks& masks) {
  if (masks.empty()) throw std::invalid_argument("mask: K >= 1 required");
  if (masks.size() != layout.n_objects()) {
    std::ostringstream os;
    os << "mask: expected masks for " << layout.n_objects() << " objects, got " << masks.size();
    throw std::invalid_argument(os.str());
  }
  for (const auto& seq : masks) {
    if (seq.size() != layout.frames())
      throw std::invalid_argument("mask: object mask frame count mismatch");
    for (const auto& m : seq)
      if (m.grid.rows() != layout.grid_h() || m.grid.cols() != layout.grid_w())
        throw std::invalid_argument("mask: spatial mask grid mismatch");
  }
}

// Relative video positions (0-based within the video segment) of object k.
std::vector<std::size_t> relative_video_tokens(const TokenLayout& layout, const MaskSequence& seq) {
  auto idx = object_video_tokens(layout, seq);
  for (auto& i : idx) i -= layout.video_offset();
  return idx;
}

void place(BinaryMatrix& dst, std::size_t r0, std::size_t c0, const BinaryMatrix& src) {
  for (std::size_t r = 0; r < src.rows(); ++r) {
    auto row = src.row(r);
    for (std::size_t c = 0; c < src.cols(); ++c)
      if (row[c]) dst.set(r0 + r, c0 + c, true);
  }
}

}  // namespace

std::string_view block_name(Block b) {
  static constexpr std::array<std::string_view, kBlockCount> names = {
      "y->y", "y->m", "y->v", "m->y", "m->m", "m->v", "v->y", "v->m", "v->v"};
  return names[static_cast<std::size_t>(b)];
}

AttentionMask::AttentionMask(TokenLayout layout, AssemblyMode mode,
                             std::array<BinaryMatrix, kBlockCount> blocks)
    : layout_(std::move(layout)), mode_(mode), blocks_(std::move(blocks)) {}

BinaryMatrix AttentionMask::dense() const {
  const std::size_t n = layout_.total();
  if (n != 0 && n > kMaxDenseMaskEntries / n) {
    std::ostringstream os;
    os << "dense mask of " << n << "x" << n << " exceeds the 2^24 entry cap";
    throw std::length_error(os.str());
  }
  const std::array<std::size_t, 3> off = {0, layout_.motion_offset(), layout_.video_offset()};
  BinaryMatrix m(n, n);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) place(m, off[i], off[j], blocks_[i * 3 + j]);
  return m;
}

BinaryMatrix build_m2v(const TokenLayout& layout, const ObjectMasks& object_masks) {
  check_object_masks(layout, object_masks);
  BinaryMatrix out(layout.n_motion(), layout.n_video());
  for (std::size_t k = 0; k < object_masks.size(); ++k) {
    const auto video = relative_video_tokens(layout, object_masks[k]);
    const auto span = layout.motion_spans()[k];
    for (std::size_t p = span.begin; p < span.end; ++p)
      for (auto q : video) out.set(p, q, true);
  }
  return out;
}

BinaryMatrix build_m2m(const TokenLayout& layout) {
  return BinaryMatrix::zeros(layout.n_motion(), layout.n_motion());
}

BinaryMatrix build_t2v(const TokenLayout& layout, const ObjectMasks& object_masks, bool literal) {
  check_object_masks(layout, object_masks);
  BinaryMatrix out(layout.n_text(), layout.n_video());
  for (std::size_t p = 0; p < layout.n_text(); ++p)
    if (!literal && layout.text_owner(p) < 0)
      for (std::size_t q = 0; q < layout.n_video(); ++q) out.set(p, q, true);
  for (std::size_t k = 0; k < object_masks.size(); ++k) {
    const auto video = relative_video_tokens(layout, object_masks[k]);
    const auto span = layout.text_motion_spans()[k];
    for (std::size_t p = span.begin; p < span.end; ++p)
      for (auto q : video) out.set(p, q, true);
  }
  return out;
}

BinaryMatrix build_t2t(const TokenLayout& layout) {
  BinaryMatrix out = BinaryMatrix::ones(layout.n_text(), layout.n_text());
  const auto& spans = layout.text_motion_spans();
  for (std::size_t a = 0; a < spans.size(); ++a)
    for (std::size_t b = 0; b < spans.size(); ++b) {
      if (a == b) continue;
      for (std::size_t p = spans[a].begin; p < spans[a].end; ++p)
        for (std::size_t q = spans[b].begin; q < spans[b].end; ++q) out.set(p, q, false);
    }
  return out;
}

BinaryMatrix build_t2m(const TokenLayout& layout) {
  BinaryMatrix out(layout.n_text(), layout.n_motion());
  const auto& spans = layout.text_motion_spans();
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const auto m = layout.motion_spans()[k];
    for (std::size_t p = spans[k].begin; p < spans[k].end; ++p)
      for (std::size_t q = m.begin; q < m.end; ++q) out.set(p, q, true);
  }
  return out;
}

AttentionMask assemble(const TokenLayout& layout, const ObjectMasks& object_masks,
                       AssemblyMode mode, const MaskOptions& options) {
  check_object_masks(layout, object_masks);
  const std::size_t nt = layout.n_text(), nv = layout.n_video();

  std::array<BinaryMatrix, kBlockCount> b;
  auto at = [&b](Block id) -> BinaryMatrix& { return b[static_cast<std::size_t>(id)]; };

  at(Block::kMM) = build_m2m(layout);
  at(Block::kMV) = build_m2v(layout, object_masks);
  at(Block::kVM) = at(Block::kMV).transposed();
  at(Block::kYM) = build_t2m(layout);
  at(Block::kMY) = at(Block::kYM).transposed();

  if (mode == AssemblyMode::kTraining) {
    at(Block::kYY) = BinaryMatrix::ones(nt, nt);
    at(Block::kYV) = BinaryMatrix::ones(nt, nv);
    at(Block::kVY) = BinaryMatrix::ones(nv, nt);
  } else {
    at(Block::kYY) = build_t2t(layout);
    at(Block::kYV) = build_t2v(layout, object_masks, options.literal_t2v);
    at(Block::kVY) = at(Block::kYV).transposed();
  }

  if (options.literal_identity_v2v) {
    BinaryMatrix eye(nv, nv);
    for (std::size_t i = 0; i < nv; ++i) eye.set(i, i, true);
    at(Block::kVV) = std::move(eye);
  } else {
    at(Block::kVV) = BinaryMatrix::ones(nv, nv);
  }
  return AttentionMask(layout, mode, std::move(b));
}

}  // namespace mdma
