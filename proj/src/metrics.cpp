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

#include "mdma/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace mdma {
namespace {

struct Samples {
  std::vector<double> magnitude;
  std::vector<double> angle;  // only vectors long enough to have a direction
};

Samples collect(std::span<const FlowField> flows, std::span<const SpatialMask> masks) {
  if (flows.size() != masks.size())
    throw std::invalid_argument("flow_fidelity: one mask per flow field required");
  Samples s;
  for (std::size_t l = 0; l < flows.size(); ++l) {
    const auto& f = flows[l];
    const auto& m = masks[l].grid;
    if (m.rows() != f.grid_h || m.cols() != f.grid_w)
      throw std::invalid_argument("flow_fidelity: mask and flow grids differ");
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!m.data()[i]) continue;
      const double dx = f.dx[i], dy = f.dy[i];
      if (!std::isfinite(dx) || !std::isfinite(dy))
        throw std::invalid_argument("flow_fidelity: non-finite flow");
      const double mag = std::hypot(dx, dy);
      s.magnitude.push_back(mag);
      if (mag >= kMinDirectionMagnitude) s.angle.push_back(std::atan2(dy, dx));
    }
  }
  if (s.magnitude.empty()) throw std::invalid_argument("flow_fidelity: empty mask");
  return s;
}

template <std::size_t N>
double intersection(const std::array<std::uint64_t, N>& a, std::uint64_t na,
                    const std::array<std::uint64_t, N>& b, std::uint64_t nb) {
  // sum_i min(a_i / na, b_i / nb), evaluated exactly over integers.
  std::uint64_t num = 0;
  for (std::size_t i = 0; i < N; ++i) num += std::min(a[i] * nb, b[i] * na);
  return static_cast<double>(num) / (static_cast<double>(na) * static_cast<double>(nb));
}

std::size_t direction_bin(double angle) {
  const double t = (angle + std::numbers::pi) / (2.0 * std::numbers::pi);
  auto b = static_cast<std::size_t>(std::floor(t * kDirectionBins));
  return b % kDirectionBins;
}

}  // namespace

double mask_iou(const BinaryMatrix& a, const BinaryMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("mask_iou: shape mismatch");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a.data()[i] & b.data()[i];
    uni += a.data()[i] | b.data()[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double mask_iou(const SpatialMask& a, const SpatialMask& b) { return mask_iou(a.grid, b.grid); }

FlowFidelity flow_fidelity(std::span<const FlowField> flow_gen, std::span<const FlowField> flow_ref,
                           std::span<const SpatialMask> mask_gen,
                           std::span<const SpatialMask> mask_ref) {
  const Samples g = collect(flow_gen, mask_gen);
  const Samples r = collect(flow_ref, mask_ref);

  double lo = g.magnitude[0], hi = g.magnitude[0];
  for (const auto* v : {&g.magnitude, &r.magnitude})
    for (double m : *v) {
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
  auto magnitude_hist = [&](const std::vector<double>& mags) {
    std::array<std::uint64_t, kMagnitudeBins> h{};
    for (double m : mags) {
      std::size_t b = 0;
      if (hi > lo) {
        b = static_cast<std::size_t>(std::floor((m - lo) / (hi - lo) * kMagnitudeBins));
        b = std::min(b, kMagnitudeBins - 1);
      }
      ++h[b];
    }
    return h;
  };
  auto direction_hist = [](const std::vector<double>& angles) {
    std::array<std::uint64_t, kDirectionBins> h{};
    for (double a : angles) ++h[direction_bin(a)];
    return h;
  };

  FlowFidelity out;
  out.magnitude = intersection(magnitude_hist(g.magnitude), g.magnitude.size(),
                               magnitude_hist(r.magnitude), r.magnitude.size());
  if (g.angle.empty() && r.angle.empty()) {
    out.direction = 1.0;
  } else if (g.angle.empty() || r.angle.empty()) {
    out.direction = 0.0;
  } else {
    out.direction = intersection(direction_hist(g.angle), g.angle.size(), direction_hist(r.angle),
                                 r.angle.size());
  }
  out.score = 0.5 * (out.magnitude + out.direction);
  return out;
}

FlowFidelity flow_fidelity(const FlowField& flow_gen, const FlowField& flow_ref,
                           const BinaryMatrix& mask_gen, const BinaryMatrix& mask_ref) {
  const SpatialMask mg{0, mask_gen}, mr{0, mask_ref};
  return flow_fidelity(std::span(&flow_gen, 1), std::span(&flow_ref, 1), std::span(&mg, 1),
                       std::span(&mr, 1));
}

}  // namespace mdma
