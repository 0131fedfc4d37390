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

// Regressive mask propagation: a first-frame object mask is carried through
// the video by thresholding the correlation of each frame's latent features
// against a set of masked anchor frames. The first frame is always an
// anchor; up to W - 1 of the most recent propagated frames join it.

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "mdma/binary_matrix.hpp"
#include "mdma/tensor_io.hpp"
#include "mdma/token_layout.hpp"

namespace mdma {

/// Latent features, frames x (grid_h * grid_w) x channels, row-major.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  FeatureSequence(std::size_t frames, std::size_t grid_h, std::size_t grid_w, std::size_t channels);

  std::size_t frames() const { return frames_; }
  std::size_t grid_h() const { return grid_h_; }
  std::size_t grid_w() const { return grid_w_; }
  std::size_t cells() const { return grid_h_ * grid_w_; }
  std::size_t channels() const { return channels_; }

  std::span<const double> frame(std::size_t l) const {
    return {data_.data() + l * cells() * channels_, cells() * channels_};
  }
  std::span<double> frame(std::size_t l) {
    return {data_.data() + l * cells() * channels_, cells() * channels_};
  }
  std::span<const double> cell(std::size_t l, std::size_t i) const {
    return {data_.data() + (l * cells() + i) * channels_, channels_};
  }
  std::span<double> cell(std::size_t l, std::size_t i) {
    return {data_.data() + (l * cells() + i) * channels_, channels_};
  }

  // Throws std::invalid_argument on non-finite entries.
  void validate() const;

  friend bool operator==(const FeatureSequence&, const FeatureSequence&) = default;

 private:
  std::size_t frames_ = 0, grid_h_ = 0, grid_w_ = 0, channels_ = 0;
  std::vector<double> data_;
};

// (L, H, W, C) tensor <-> FeatureSequence.
FeatureSequence features_from_tensor(const Tensor& t);
Tensor features_to_tensor(const FeatureSequence& f);

struct DenseMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

/// One anchor: a frame's features (cells x channels) and its object mask.
struct Anchor {
  std::vector<double> features;
  BinaryMatrix mask;
};

/// First-frame anchor plus a bounded FIFO of recent anchors.
class AnchorWindow {
 public:
  AnchorWindow(std::size_t capacity, Anchor pinned_first);

  std::size_t capacity() const { return capacity_; }
  const Anchor& pinned() const { return pinned_; }
  const std::deque<Anchor>& entries() const { return entries_; }
  bool full() const { return entries_.size() >= capacity_; }
  // Pinned first plus entries.
  std::size_t anchor_count() const { return 1 + entries_.size(); }

  void evict_oldest();
  // Appends; the caller evicts first when full.
  void append(Anchor a);

  // Concatenated anchor masks, pinned first, flattened row-major.
  std::vector<std::uint8_t> mask_vector() const;

 private:
  std::size_t capacity_;
  Anchor pinned_;
  std::deque<Anchor> entries_;
};

/// Per-row L2 normalization; all-zero rows stay zero.
void l2_normalize_rows(std::span<double> rows, std::size_t width);

/// C = Norm(F_l) . Norm(F_anc * M_anc)^T, grid_cells x (anchor_count * grid_cells).
DenseMatrix correlation(std::span<const double> frame_features, std::size_t channels,
                        const AnchorWindow& window);

/// S = M_anc . C^T, thresholded strictly above its mean.
SpatialMask propagate_step(const DenseMatrix& corr, const AnchorWindow& window,
                           std::size_t frame = 0);

struct MaskTrack {
  std::size_t object = 0;
  MaskSequence masks;

  friend bool operator==(const MaskTrack&, const MaskTrack&) = default;
};

MaskTrack propagate_object(const FeatureSequence& features, const SpatialMask& first_mask,
                           std::size_t window, std::size_t object = 0);

/// Independent per-object propagation. `jobs` > 1 runs objects on threads.
std::vector<MaskTrack> propagate_all(const FeatureSequence& features,
                                     std::span<const SpatialMask> first_masks,
                                     std::size_t window, unsigned jobs = 1);

/// Mean Hamming fraction over objects, frames and cells.
double mask_difference(std::span<const MaskTrack> a, std::span<const MaskTrack> b);

/// Early-freeze state for propagation repeated across denoising steps.
struct DynamicState {
  double alpha = 0.05;
  bool frozen = false;
  std::optional<std::size_t> frozen_step;  // step index at which freezing happened
  std::vector<MaskTrack> last_tracks;
  std::size_t propagation_calls = 0;
  std::size_t steps_seen = 0;
  std::vector<double> differences;  // one per compared step

  explicit DynamicState(double alpha_threshold = 0.05);
};

/// One denoising step. Once frozen, returns the stored tracks without
/// propagating. Otherwise propagates, compares with the previous step
/// (skipped on the first call) and freezes when the difference is < alpha.
const std::vector<MaskTrack>& dynamic_update(DynamicState& state, std::size_t step,
                                             const FeatureSequence& features,
                                             std::span<const SpatialMask> first_masks,
                                             std::size_t window, unsigned jobs = 1);

// (K, L, H, W) tensor <-> tracks; (K, H, W) tensor -> first masks.
Tensor tracks_to_tensor(std::span<const MaskTrack> tracks);
std::vector<MaskTrack> tracks_from_tensor(const Tensor& t);
std::vector<SpatialMask> first_masks_from_tensor(const Tensor& t);

}  // namespace mdma
