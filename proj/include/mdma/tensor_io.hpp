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

// FMT1 tensor container.
//
//   bytes 0..3   magic "FMT1"
//   bytes 4..7   ndim, uint32 little-endian, 1 <= ndim <= 5
//   next 4*ndim  dims, uint32 little-endian, each >= 1
//   payload      product(dims) float32 little-endian, row-major
//
// Nothing may follow the payload. Binary masks are stored as 0.0f / 1.0f.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdma {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxTensorRank = 5;
// 2^30 floats (4 GiB payload) is far beyond anything desk-scale.
inline constexpr std::uint64_t kMaxTensorElements = std::uint64_t{1} << 30;

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, float fill = 0.0f);

  std::size_t rank() const { return shape.size(); }
  std::size_t numel() const { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

Tensor read_tensor(const std::filesystem::path& path);
// Whole-file write through a temporary sibling and rename.
void write_tensor(const std::filesystem::path& path, const Tensor& t);

// Writes bytes atomically (temp file + rename). Shared by every writer.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

// Throws FormatError("non-binary mask value") unless every entry is 0 or 1.
void require_binary(const Tensor& t);
// Throws FormatError naming `what` unless t has exactly `rank` dims.
void require_rank(const Tensor& t, std::size_t rank, const std::string& what);

}  // namespace mdma
