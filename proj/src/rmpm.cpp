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

#include "mdma/rmpm.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mdma/threshold.hpp"

namespace mdma {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> masked_normalized(const Anchor& a, std::size_t channels) {
  std::vector<double> rows = a.features;
  const std::size_t cells = a.mask.size();
  for (std::size_t i = 0; i < cells; ++i)
    if (!a.mask.data()[i])
      for (std::size_t c = 0; c < channels; ++c) rows[i * channels + c] = 0.0;
  l2_normalize_rows(rows, channels);
  return rows;
}

Anchor make_anchor(const FeatureSequence& f, std::size_t l, BinaryMatrix mask) {
  auto fr = f.frame(l);
  return {std::vector<double>(fr.begin(), fr.end()), std::move(mask)};
}

}  // namespace

FeatureSequence::FeatureSequence(std::size_t frames, std::size_t grid_h, std::size_t grid_w,
                                 std::size_t channels)
    : frames_(frames),
      grid_h_(grid_h),
      grid_w_(grid_w),
      channels_(channels),
      data_(frames * grid_h * grid_w * channels, 0.0) {}

void FeatureSequence::validate() const {
  for (double x : data_)
    if (!std::isfinite(x)) throw std::invalid_argument("features: non-finite entry");
}

FeatureSequence features_from_tensor(const Tensor& t) {
  require_rank(t, 4, "features");
  FeatureSequence f(t.dim(0), t.dim(1), t.dim(2), t.dim(3));
  for (std::size_t l = 0; l < f.frames(); ++l) {
    auto dst = f.frame(l);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = t.data[l * dst.size() + i];
  }
  f.validate();
  return f;
}

Tensor features_to_tensor(const FeatureSequence& f) {
  Tensor t({f.frames(), f.grid_h(), f.grid_w(), f.channels()});
  for (std::size_t l = 0; l < f.frames(); ++l) {
    auto src = f.frame(l);
    for (std::size_t i = 0; i < src.size(); ++i)
      t.data[l * src.size() + i] = static_cast<float>(src[i]);
  }
  return t;
}

AnchorWindow::AnchorWindow(std::size_t capacity, Anchor pinned_first)
    : capacity_(capacity), pinned_(std::move(pinned_first)) {
  if (capacity_ < 1) throw std::invalid_argument("anchor window: W must be >= 1");
}

void AnchorWindow::evict_oldest() {
  if (!entries_.empty()) entries_.pop_front();
}

void AnchorWindow::append(Anchor a) {
  if (a.mask.rows() != pinned_.mask.rows() || a.mask.cols() != pinned_.mask.cols() ||
      a.features.size() != pinned_.features.size())
    throw std::invalid_argument("anchor window: anchor shape mismatch");
  if (full()) throw std::logic_error("anchor window: append to a full window");
  entries_.push_back(std::move(a));
}

std::vector<std::uint8_t> AnchorWindow::mask_vector() const {
  std::vector<std::uint8_t> v(pinned_.mask.data().begin(), pinned_.mask.data().end());
  for (const auto& e : entries_) v.insert(v.end(), e.mask.data().begin(), e.mask.data().end());
  return v;
}

void l2_normalize_rows(std::span<double> rows, std::size_t width) {
  if (width == 0 || rows.size() % width != 0)
    throw std::invalid_argument("l2_normalize_rows: bad row width");
  for (std::size_t r = 0; r < rows.size() / width; ++r) {
    auto row = rows.subspan(r * width, width);
    double ss = 0.0;
    for (double x : row) ss += x * x;
    if (ss == 0.0) continue;
    const double norm = std::sqrt(ss);
    for (double& x : row) x /= norm;
  }
}

DenseMatrix correlation(std::span<const double> frame_features, std::size_t channels,
                        const AnchorWindow& window) {
  const std::size_t cells = window.pinned().mask.size();
  if (channels == 0 || frame_features.size() != cells * channels ||
      window.pinned().features.size() != cells * channels)
    throw std::invalid_argument("correlation: channel or cell count mismatch");

  std::vector<double> cur(frame_features.begin(), frame_features.end());
  l2_normalize_rows(cur, channels);

  std::vector<std::vector<double>> anchors;
  anchors.push_back(masked_normalized(window.pinned(), channels));
  for (const auto& e : window.entries()) anchors.push_back(masked_normalized(e, channels));

  DenseMatrix c{cells, anchors.size() * cells, {}};
  c.data.assign(c.rows * c.cols, 0.0);
  for (std::size_t q = 0; q < cells; ++q) {
    std::span<const double> fq(cur.data() + q * channels, channels);
    for (std::size_t a = 0; a < anchors.size(); ++a)
      for (std::size_t i = 0; i < cells; ++i)
        c(q, a * cells + i) =
            dot(fq, std::span<const double>(anchors[a].data() + i * channels, channels));
  }
  return c;
}

SpatialMask propagate_step(const DenseMatrix& corr, const AnchorWindow& window, std::size_t frame) {
  const auto m_anc = window.mask_vector();
  const auto& shape = window.pinned().mask;
  if (corr.cols != m_anc.size() || corr.rows != shape.size())
    throw std::invalid_argument("propagate_step: correlation shape mismatch");

  std::vector<double> s(corr.rows, 0.0);
  for (std::size_t q = 0; q < corr.rows; ++q) {
    double acc = 0.0;
    for (std::size_t a = 0; a < corr.cols; ++a)
      if (m_anc[a]) acc += corr(q, a);
    s[q] = acc;
  }
  const auto bits = threshold_above_mean(s);
  SpatialMask out{frame, BinaryMatrix(shape.rows(), shape.cols())};
  std::copy(bits.begin(), bits.end(), out.grid.mutable_data().begin());
  return out;
}

MaskTrack propagate_object(const FeatureSequence& features, const SpatialMask& first_mask,
                           std::size_t window, std::size_t object) {
  if (features.frames() == 0) throw std::invalid_argument("propagate: no frames");
  if (window < 1) throw std::invalid_argument("propagate: W must be >= 1");
  if (first_mask.grid.rows() != features.grid_h() || first_mask.grid.cols() != features.grid_w())
    throw std::invalid_argument("propagate: first mask does not match feature grid");

  MaskTrack track{object, {}};
  track.masks.push_back({0, first_mask.grid});
  AnchorWindow anchors(window, make_anchor(features, 0, first_mask.grid));
  for (std::size_t l = 1; l < features.frames(); ++l) {
    if (anchors.full()) anchors.evict_oldest();
    const auto c = correlation(features.frame(l), features.channels(), anchors);
    auto m = propagate_step(c, anchors, l);
    anchors.append(make_anchor(features, l, m.grid));
    track.masks.push_back(std::move(m));
  }
  return track;
}

std::vector<MaskTrack> propagate_all(const FeatureSequence& features,
                                     std::span<const SpatialMask> first_masks, std::size_t window,
                                     unsigned jobs) {
  std::vector<MaskTrack> out(first_masks.size());
  if (jobs <= 1 || first_masks.size() <= 1) {
    for (std::size_t k = 0; k < first_masks.size(); ++k)
      out[k] = propagate_object(features, first_masks[k], window, k);
    return out;
  }
  std::vector<std::exception_ptr> errors(first_masks.size());
  {
    std::vector<std::jthread> pool;
    const std::size_t n = std::min<std::size_t>(jobs, first_masks.size());
    for (std::size_t t = 0; t < n; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t k = t; k < first_masks.size(); k += n) {
          try {
            out[k] = propagate_object(features, first_masks[k], window, k);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

double mask_difference(std::span<const MaskTrack> a, std::span<const MaskTrack> b) {
  if (a.size() != b.size()) throw std::invalid_argument("mask_difference: object count mismatch");
  std::size_t diff = 0, total = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].masks.size() != b[k].masks.size())
      throw std::invalid_argument("mask_difference: frame count mismatch");
    for (std::size_t l = 0; l < a[k].masks.size(); ++l) {
      const auto& x = a[k].masks[l].grid;
      const auto& y = b[k].masks[l].grid;
      if (x.rows() != y.rows() || x.cols() != y.cols())
        throw std::invalid_argument("mask_difference: grid mismatch");
      for (std::size_t i = 0; i < x.size(); ++i) diff += x.data()[i] != y.data()[i];
      total += x.size();
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(diff) / static_cast<double>(total);
}

DynamicState::DynamicState(double alpha_threshold) : alpha(alpha_threshold) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("dynamic: alpha must be in [0, 1]");
}

const std::vector<MaskTrack>& dynamic_update(DynamicState& state, std::size_t step,
                                             const FeatureSequence& features,
                                             std::span<const SpatialMask> first_masks,
                                             std::size_t window, unsigned jobs) {
  ++state.steps_seen;
  if (state.frozen) return state.last_tracks;

  auto tracks = propagate_all(features, first_masks, window, jobs);
  ++state.propagation_calls;
  if (state.propagation_calls > 1) {
    const double d = mask_difference(tracks, state.last_tracks);
    state.differences.push_back(d);
    if (d < state.alpha) {
      state.frozen = true;
      state.frozen_step = step;
    }
  }
  state.last_tracks = std::move(tracks);
  return state.last_tracks;
}

Tensor tracks_to_tensor(std::span<const MaskTrack> tracks) {
  if (tracks.empty()) throw std::invalid_argument("tracks_to_tensor: no tracks");
  const auto& g0 = tracks[0].masks.at(0).grid;
  const std::size_t L = tracks[0].masks.size(), cells = g0.size();
  Tensor t({tracks.size(), L, g0.rows(), g0.cols()});
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    if (tracks[k].masks.size() != L) throw std::invalid_argument("tracks_to_tensor: ragged tracks");
    for (std::size_t l = 0; l < L; ++l) {
      const auto& g = tracks[k].masks[l].grid;
      if (g.size() != cells) throw std::invalid_argument("tracks_to_tensor: ragged grids");
      for (std::size_t i = 0; i < cells; ++i)
        t.data[(k * L + l) * cells + i] = g.data()[i] ? 1.0f : 0.0f;
    }
  }
  return t;
}

std::vector<MaskTrack> tracks_from_tensor(const Tensor& t) {
  require_rank(t, 4, "tracks");
  require_binary(t);
  const std::size_t K = t.dim(0), L = t.dim(1), H = t.dim(2), W = t.dim(3);
  std::vector<MaskTrack> out;
  for (std::size_t k = 0; k < K; ++k) {
    MaskTrack tr{k, {}};
    for (std::size_t l = 0; l < L; ++l) {
      SpatialMask m{l, BinaryMatrix(H, W)};
      for (std::size_t i = 0; i < H * W; ++i)
        m.grid.mutable_data()[i] = t.data[(k * L + l) * H * W + i] != 0.0f;
      tr.masks.push_back(std::move(m));
    }
    out.push_back(std::move(tr));
  }
  return out;
}

std::vector<SpatialMask> first_masks_from_tensor(const Tensor& t) {
  require_rank(t, 3, "first masks");
  require_binary(t);
  const std::size_t K = t.dim(0), H = t.dim(1), W = t.dim(2);
  std::vector<SpatialMask> out;
  for (std::size_t k = 0; k < K; ++k) {
    SpatialMask m{0, BinaryMatrix(H, W)};
    for (std::size_t i = 0; i < H * W; ++i) m.grid.mutable_data()[i] = t.data[k * H * W + i] != 0.0f;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace mdma
