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

#include "mdma/token_layout.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mdma {

using nlohmann::json;

namespace {

std::size_t count_field(const json& v) {
  if (!v.is_number_unsigned()) throw std::invalid_argument("layout json: expected non-negative integer");
  return v.get<std::size_t>();
}

}  // namespace

TokenLayout build_layout(std::size_t n_text, std::size_t motion_per_object,
                         std::size_t n_objects, std::size_t frames, std::size_t grid_h,
                         std::size_t grid_w, std::vector<IndexSpan> text_motion_spans) {
  if (n_text < 1 || motion_per_object < 1 || n_objects < 1 || frames < 1 || grid_h < 1 ||
      grid_w < 1)
    throw std::invalid_argument("layout: all counts must be >= 1");
  if (text_motion_spans.size() != n_objects) {
    std::ostringstream os;
    os << "layout: expected " << n_objects << " text spans, got " << text_motion_spans.size();
    throw std::invalid_argument(os.str());
  }
  for (const auto& s : text_motion_spans) {
    if (s.begin >= s.end) throw std::invalid_argument("layout: empty text span");
    if (s.end > n_text) throw std::invalid_argument("layout: text span out of range");
  }
  for (std::size_t a = 0; a < text_motion_spans.size(); ++a)
    for (std::size_t b = a + 1; b < text_motion_spans.size(); ++b) {
      const auto& x = text_motion_spans[a];
      const auto& y = text_motion_spans[b];
      if (x.begin < y.end && y.begin < x.end)
        throw std::invalid_argument("layout: overlapping text spans");
    }

  TokenLayout l;
  l.n_text_ = n_text;
  l.motion_per_object_ = motion_per_object;
  l.n_objects_ = n_objects;
  l.frames_ = frames;
  l.grid_h_ = grid_h;
  l.grid_w_ = grid_w;
  l.text_motion_spans_ = std::move(text_motion_spans);
  for (std::size_t k = 0; k < n_objects; ++k)
    l.motion_spans_.push_back({k * motion_per_object, (k + 1) * motion_per_object});
  return l;
}

Segment TokenLayout::segment_of(std::size_t i) const {
  if (i >= total()) throw std::out_of_range("token index out of range");
  if (i < n_text_) return Segment::kText;
  if (i < video_offset()) return Segment::kMotion;
  return Segment::kVideo;
}

int TokenLayout::text_owner(std::size_t p) const {
  for (std::size_t k = 0; k < text_motion_spans_.size(); ++k)
    if (text_motion_spans_[k].contains(p)) return static_cast<int>(k);
  return -1;
}

std::size_t video_token_index(const TokenLayout& layout, std::size_t frame, std::size_t row,
                              std::size_t col) {
  if (frame >= layout.frames() || row >= layout.grid_h() || col >= layout.grid_w())
    throw std::out_of_range("video_token_index: coordinate out of range");
  return layout.video_offset() + frame * layout.grid_cells() + row * layout.grid_w() + col;
}

std::vector<std::size_t> object_video_tokens(const TokenLayout& layout,
                                             std::span<const SpatialMask> frame_masks) {
  if (frame_masks.size() != layout.frames())
    throw std::invalid_argument("object_video_tokens: frame count mismatch");
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < frame_masks.size(); ++f) {
    const auto& g = frame_masks[f].grid;
    if (g.rows() != layout.grid_h() || g.cols() != layout.grid_w())
      throw std::invalid_argument("object_video_tokens: grid dimension mismatch");
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c)
        if (g(r, c)) out.push_back(video_token_index(layout, f, r, c));
  }
  return out;
}

std::string layout_to_json(const TokenLayout& l) {
  json spans = json::array();
  for (const auto& s : l.text_motion_spans()) spans.push_back({s.begin, s.end});
  json mspans = json::array();
  for (const auto& s : l.motion_spans()) mspans.push_back({s.begin, s.end});
  json j = {{"n_text", l.n_text()},
            {"n_motion_per_object", l.motion_per_object()},
            {"n_objects", l.n_objects()},
            {"frames", l.frames()},
            {"grid_h", l.grid_h()},
            {"grid_w", l.grid_w()},
            {"text_motion_spans", spans},
            {"motion_spans", mspans}};
  return j.dump(2) + "\n";
}

TokenLayout layout_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("layout json: ") + e.what());
  }
  try {
    std::vector<IndexSpan> spans;
    for (const auto& s : j.at("text_motion_spans")) {
      if (!s.is_array() || s.size() != 2)
        throw std::invalid_argument("layout json: span must be [begin, end]");
      spans.push_back({count_field(s[0]), count_field(s[1])});
    }
    auto l = build_layout(count_field(j.at("n_text")), count_field(j.at("n_motion_per_object")),
                          count_field(j.at("n_objects")), count_field(j.at("frames")),
                          count_field(j.at("grid_h")), count_field(j.at("grid_w")),
                          std::move(spans));
    // motion_spans is derived; when present it must agree.
    if (j.contains("motion_spans")) {
      const auto& ms = j["motion_spans"];
      bool ok = ms.is_array() && ms.size() == l.motion_spans().size();
      for (std::size_t k = 0; ok && k < ms.size(); ++k)
        ok = ms[k].is_array() && ms[k].size() == 2 &&
             ms[k][0].get<std::size_t>() == l.motion_spans()[k].begin &&
             ms[k][1].get<std::size_t>() == l.motion_spans()[k].end;
      if (!ok) throw std::invalid_argument("layout json: motion_spans inconsistent with counts");
    }
    return l;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("layout json: ") + e.what());
  }
}

}  // namespace mdma
