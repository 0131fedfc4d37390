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

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "mdma/binary_matrix.hpp"
#include "mdma/token_layout.hpp"

namespace mdma {

/// Per-object, per-frame spatial masks: object_masks[k][frame].
using ObjectMasks = std::vector<MaskSequence>;

enum class AssemblyMode { kInference, kTraining };

/// Switches to the literal printed readings of two blocks. Both are off by
/// default: with them on, appearance text is blind to video and video tokens
/// only see themselves.
struct MaskOptions {
  bool literal_identity_v2v = false;
  bool literal_t2v = false;
};

// Row-major block order of the assembled matrix: segment of the query row,
// then segment of the key column (y = text, m = motion, v = video).
enum class Block : std::size_t { kYY, kYM, kYV, kMY, kMM, kMV, kVY, kVM, kVV };
inline constexpr std::size_t kBlockCount = 9;
std::string_view block_name(Block b);

inline constexpr std::size_t kMaxDenseMaskEntries = std::size_t{1} << 24;

class AttentionMask {
 public:
  AttentionMask(TokenLayout layout, AssemblyMode mode, std::array<BinaryMatrix, kBlockCount> blocks);

  const TokenLayout& layout() const { return layout_; }
  AssemblyMode mode() const { return mode_; }
  const BinaryMatrix& block(Block b) const { return blocks_[static_cast<std::size_t>(b)]; }

  // Throws std::length_error past kMaxDenseMaskEntries.
  BinaryMatrix dense() const;
  RowRuns compressed(Block b) const { return RowRuns::compress(block(b)); }

 private:
  TokenLayout layout_;
  AssemblyMode mode_;
  std::array<BinaryMatrix, kBlockCount> blocks_;
};

// Motion -> video, union over objects. Shape (K*d_m) x n_video.
BinaryMatrix build_m2v(const TokenLayout& layout, const ObjectMasks& object_masks);

// Motion -> motion; always zero.
BinaryMatrix build_m2m(const TokenLayout& layout);

// Text -> video. Motion-text rows of object k open on T_v^k; all other text
// rows are all-ones, or all-zero with `literal`.
BinaryMatrix build_t2v(const TokenLayout& layout, const ObjectMasks& object_masks,
                       bool literal = false);

// Text -> text. Zero exactly where query and key sit in motion-text spans
// of two different objects.
BinaryMatrix build_t2t(const TokenLayout& layout);

// Text -> motion. Motion-text rows of object k open on motion span k;
// everything else is zero.
BinaryMatrix build_t2m(const TokenLayout& layout);

/// Full object-specific mask. Training mode keeps only the m->m, m->v/v->m
/// and y->m/m->y constraints and opens every other block.
AttentionMask assemble(const TokenLayout& layout, const ObjectMasks& object_masks,
                       AssemblyMode mode, const MaskOptions& options = {});

}  // namespace mdma
