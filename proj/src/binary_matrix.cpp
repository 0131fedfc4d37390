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

#include "mdma/binary_matrix.hpp"

#include <algorithm>
#include <stdexcept>

namespace mdma {

BinaryMatrix::BinaryMatrix(std::size_t rows, std::size_t cols, std::uint8_t fill)
    : rows_(rows), cols_(cols), bits_(rows * cols, fill ? 1 : 0) {}

BinaryMatrix BinaryMatrix::transposed() const {
  BinaryMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t.bits_[c * rows_ + r] = bits_[r * cols_ + c];
  return t;
}

std::size_t BinaryMatrix::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryMatrix& BinaryMatrix::operator|=(const BinaryMatrix& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_)
    throw std::invalid_argument("BinaryMatrix |=: shape mismatch");
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
  return *this;
}

RowRuns RowRuns::compress(const BinaryMatrix& m) {
  RowRuns out;
  out.rows = m.rows();
  out.cols = m.cols();
  out.runs.resize(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    std::size_t c = 0;
    while (c < row.size()) {
      if (!row[c]) {
        ++c;
        continue;
      }
      std::size_t begin = c;
      while (c < row.size() && row[c]) ++c;
      out.runs[r].emplace_back(begin, c);
    }
  }
  return out;
}

BinaryMatrix RowRuns::expand() const {
  BinaryMatrix m(rows, cols);
  for (std::size_t r = 0; r < runs.size(); ++r)
    for (auto [b, e] : runs[r])
      for (std::size_t c = b; c < e; ++c) m.set(r, c, true);
  return m;
}

std::size_t RowRuns::run_count() const {
  std::size_t n = 0;
  for (const auto& r : runs) n += r.size();
  return n;
}

}  // namespace mdma
