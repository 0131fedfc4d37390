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
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mdma/binary_matrix.hpp"
#include "mdma/rmpm.hpp"

namespace mdma {

/// 8-bit grayscale image.
struct GrayImage {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

// Binary P5 ("P5\n<w> <h>\n255\n" + pixels).
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

// Ones white, zeros black; each entry becomes a scale x scale block.
GrayImage render_binary(const BinaryMatrix& m, std::size_t scale = 1);

// Min-max normalized heatmap of a rows x cols value grid.
GrayImage render_heatmap(std::span<const float> values, std::size_t rows, std::size_t cols,
                         std::size_t scale = 1);

// Every object's mask at `frame`; object k drawn at gray level
// 255 * (k + 1) / K, later objects on top.
GrayImage render_tracks(std::span<const MaskTrack> tracks, std::size_t frame, std::size_t scale = 1);

}  // namespace mdma
