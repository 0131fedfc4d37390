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
#include <string>
#include <vector>

#include "mdma/binary_matrix.hpp"

namespace mdma {

/// Half-open index range [begin, end).
struct IndexSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const IndexSpan&, const IndexSpan&) = default;
};

enum class Segment { kText, kMotion, kVideo };

/// Geometry of the concatenated [text | motion | video] token sequence.
///
/// Motion tokens are grouped by object, object k owning
/// [k * motion_per_object, (k + 1) * motion_per_object) relative to the
/// motion segment. Video tokens are frame-major, then row-major on the
/// latent grid. Text spans are the motion-describing text tokens of each
/// object and are relative to the text segment.
class TokenLayout {
 public:
  TokenLayout() = default;

  std::size_t n_text() const { return n_text_; }
  std::size_t motion_per_object() const { return motion_per_object_; }
  std::size_t n_objects() const { return n_objects_; }
  std::size_t frames() const { return frames_; }
  std::size_t grid_h() const { return grid_h_; }
  std::size_t grid_w() const { return grid_w_; }
  std::size_t grid_cells() const { return grid_h_ * grid_w_; }

  std::size_t n_motion() const { return n_objects_ * motion_per_object_; }
  std::size_t n_video() const { return frames_ * grid_cells(); }
  std::size_t total() const { return n_text_ + n_motion() + n_video(); }

  std::size_t motion_offset() const { return n_text_; }
  std::size_t video_offset() const { return n_text_ + n_motion(); }

  const std::vector<IndexSpan>& text_motion_spans() const { return text_motion_spans_; }
  const std::vector<IndexSpan>& motion_spans() const { return motion_spans_; }

  Segment segment_of(std::size_t global_index) const;
  bool is_text(std::size_t i) const { return i < n_text_; }
  bool is_motion(std::size_t i) const { return i >= n_text_ && i < video_offset(); }
  bool is_video(std::size_t i) const { return i >= video_offset() && i < total(); }

  // Object whose motion-text span contains text index p, or -1.
  int text_owner(std::size_t p) const;

  friend bool operator==(const TokenLayout&, const TokenLayout&) = default;

 private:
  friend TokenLayout build_layout(std::size_t, std::size_t, std::size_t, std::size_t,
                                  std::size_t, std::size_t, std::vector<IndexSpan>);

  std::size_t n_text_ = 0;
  std::size_t motion_per_object_ = 0;
  std::size_t n_objects_ = 0;
  std::size_t frames_ = 0;
  std::size_t grid_h_ = 0;
  std::size_t grid_w_ = 0;
  std::vector<IndexSpan> text_motion_spans_;
  std::vector<IndexSpan> motion_spans_;
};

/// Validates counts and spans and derives the motion spans.
/// Throws std::invalid_argument on zero counts, a span count different
/// from n_objects, empty or out-of-range spans, or overlapping spans.
TokenLayout build_layout(std::size_t n_text, std::size_t motion_per_object,
                         std::size_t n_objects, std::size_t frames, std::size_t grid_h,
                         std::size_t grid_w, std::vector<IndexSpan> text_motion_spans);

std::size_t video_token_index(const TokenLayout& layout, std::size_t frame, std::size_t row,
                              std::size_t col);

/// Per-frame binary mask over the latent grid for one object.
struct SpatialMask {
  std::size_t frame = 0;
  BinaryMatrix grid;

  friend bool operator==(const SpatialMask&, const SpatialMask&) = default;
};

using MaskSequence = std::vector<SpatialMask>;  // one entry per frame

/// Sorted global indices of the video tokens covered by the masks (T_v^k).
std::vector<std::size_t> object_video_tokens(const TokenLayout& layout,
                                             std::span<const SpatialMask> frame_masks);

std::string layout_to_json(const TokenLayout& layout);
TokenLayout layout_from_json(const std::string& text);

}  // namespace mdma
