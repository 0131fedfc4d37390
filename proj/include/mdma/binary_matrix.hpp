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
#include <span>
#include <utility>
#include <vector>

namespace mdma {

/// Row-major dense 0/1 matrix. Used for attention-mask blocks and for
/// per-frame spatial masks.
class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  BinaryMatrix(std::size_t rows, std::size_t cols, std::uint8_t fill = 0);

  static BinaryMatrix ones(std::size_t rows, std::size_t cols) {
    return BinaryMatrix(rows, cols, 1);
  }
  static BinaryMatrix zeros(std::size_t rows, std::size_t cols) {
    return BinaryMatrix(rows, cols, 0);
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return bits_.size(); }

  std::uint8_t operator()(std::size_t r, std::size_t c) const {
    return bits_[r * cols_ + c];
  }
  void set(std::size_t r, std::size_t c, bool v) {
    bits_[r * cols_ + c] = v ? 1 : 0;
  }

  std::span<const std::uint8_t> row(std::size_t r) const {
    return {bits_.data() + r * cols_, cols_};
  }
  std::span<const std::uint8_t> data() const { return bits_; }
  std::span<std::uint8_t> mutable_data() { return bits_; }

  BinaryMatrix transposed() const;
  std::size_t count() const;
  bool all_zero() const { return count() == 0; }
  bool all_one() const { return count() == size(); }

  // Elementwise OR; shapes must match.
  BinaryMatrix& operator|=(const BinaryMatrix& other);

  friend bool operator==(const BinaryMatrix&, const BinaryMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Compressed form of a BinaryMatrix: per row, the half-open column runs
/// holding ones. Block masks built from span products compress to a handful
/// of runs per row.
struct RowRuns {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> runs;

  static RowRuns compress(const BinaryMatrix& m);
  BinaryMatrix expand() const;
  std::size_t run_count() const;
};

}  // namespace mdma
