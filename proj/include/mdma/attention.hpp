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
#include <string_view>
#include <vector>

#include "mdma/binary_matrix.hpp"
#include "mdma/mdma_mask.hpp"
#include "mdma/tensor_io.hpp"

namespace mdma {

/// Dense (d0 x d1 x d2) array of doubles, row-major.
struct Array3 {
  std::size_t d0 = 0, d1 = 0, d2 = 0;
  std::vector<double> data;

  Array3() = default;
  Array3(std::size_t a, std::size_t b, std::size_t c, double fill = 0.0)
      : d0(a), d1(b), d2(c), data(a * b * c, fill) {}

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * d1 + j) * d2 + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * d1 + j) * d2 + k];
  }
  std::span<double> row(std::size_t i, std::size_t j) { return {data.data() + (i * d1 + j) * d2, d2}; }
  std::span<const double> row(std::size_t i, std::size_t j) const {
    return {data.data() + (i * d1 + j) * d2, d2};
  }

  friend bool operator==(const Array3&, const Array3&) = default;
};

/// Per-head query/key/value projections of the concatenated sequence,
/// each heads x tokens x head_dim.
struct ProjectedTokens {
  Array3 q, k, v;

  std::size_t heads() const { return q.d0; }
  std::size_t tokens() const { return q.d1; }
  std::size_t head_dim() const { return q.d2; }

  // Throws std::invalid_argument on inconsistent shapes or non-finite values.
  void validate() const;
};

// (3, heads, tokens, head_dim) tensor <-> ProjectedTokens.
ProjectedTokens tokens_from_tensor(const Tensor& t);
Tensor tokens_to_tensor(const ProjectedTokens& p);
Tensor array_to_tensor(const Array3& a);

enum class MaskMode {
  kMulLogits,  // softmax(A * M), the literal elementwise product on logits
  kNegInf,     // softmax(A + log M), log 0 = -inf
  kMulProbs,   // softmax(A) * M, renormalized per row
};

MaskMode parse_mask_mode(std::string_view name);
std::string_view mask_mode_name(MaskMode mode);

/// scores[h] = Q[h] K[h]^T / sqrt(head_dim).
Array3 attention_scores(const ProjectedTokens& tokens);

/// Row-wise masked softmax of every head's scores. The mask is tokens x
/// tokens and broadcast over heads. Rows with no permitted entry come out
/// all-zero in kNegInf and kMulProbs modes.
Array3 apply_mask(const Array3& scores, const BinaryMatrix& mask, MaskMode mode);
Array3 apply_mask(const Array3& scores, const AttentionMask& mask, MaskMode mode);

/// probabilities . V per head; result is heads x tokens x head_dim.
/// `jobs` > 1 spreads heads over threads; the result does not depend on it.
Array3 masked_attention(const ProjectedTokens& tokens, const BinaryMatrix& mask, MaskMode mode,
                        unsigned jobs = 1);
Array3 masked_attention(const ProjectedTokens& tokens, const AttentionMask& mask, MaskMode mode,
                        unsigned jobs = 1);

/// Outputs for the listed query rows only: heads x rows.size() x head_dim.
/// Row values are identical to the matching rows of masked_attention.
Array3 masked_attention_rows(const ProjectedTokens& tokens, const BinaryMatrix& mask,
                             MaskMode mode, std::span<const std::size_t> rows);

// Softmax of one score row under a mask row; exposed for the DMEM and tests.
void masked_softmax_row(std::span<const double> scores, std::span<const std::uint8_t> mask,
                        MaskMode mode, std::span<double> out);

}  // namespace mdma
