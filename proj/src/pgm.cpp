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

#include "mdma/pgm.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "mdma/tensor_io.hpp"

namespace mdma {
namespace {

GrayImage blank(std::size_t rows, std::size_t cols, std::size_t scale) {
  if (scale < 1) throw std::invalid_argument("render: scale must be >= 1");
  GrayImage img;
  img.width = cols * scale;
  img.height = rows * scale;
  img.pixels.assign(img.width * img.height, 0);
  return img;
}

void fill_cell(GrayImage& img, std::size_t r, std::size_t c, std::size_t scale, std::uint8_t v) {
  for (std::size_t y = r * scale; y < (r + 1) * scale; ++y)
    for (std::size_t x = c * scale; x < (c + 1) * scale; ++x) img.pixels[y * img.width + x] = v;
}

}  // namespace

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  if (img.pixels.size() != img.width * img.height)
    throw std::invalid_argument("pgm: pixel count mismatch");
  const std::string header =
      "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  write_file_atomic(path, encode_pgm(img));
}

GrayImage render_binary(const BinaryMatrix& m, std::size_t scale) {
  GrayImage img = blank(m.rows(), m.cols(), scale);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (m(r, c)) fill_cell(img, r, c, scale, 255);
  return img;
}

GrayImage render_heatmap(std::span<const float> values, std::size_t rows, std::size_t cols,
                         std::size_t scale) {
  if (values.size() != rows * cols) throw std::invalid_argument("render: value count mismatch");
  GrayImage img = blank(rows, cols, scale);
  if (values.empty()) return img;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = range > 0.0 ? (values[r * cols + c] - *lo) / range : 0.0;
      fill_cell(img, r, c, scale, static_cast<std::uint8_t>(v * 255.0 + 0.5));
    }
  return img;
}

GrayImage render_tracks(std::span<const MaskTrack> tracks, std::size_t frame, std::size_t scale) {
  if (tracks.empty()) throw std::invalid_argument("render: no tracks");
  const auto& g0 = tracks[0].masks.at(frame).grid;
  GrayImage img = blank(g0.rows(), g0.cols(), scale);
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    const auto level = static_cast<std::uint8_t>(255 * (k + 1) / tracks.size());
    const auto& g = tracks[k].masks.at(frame).grid;
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c)
        if (g(r, c)) fill_cell(img, r, c, scale, level);
  }
  return img;
}

}  // namespace mdma
