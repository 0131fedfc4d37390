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

#include "mdma/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace mdma {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_mask_shape(const BinaryMatrix& mask, std::size_t n) {
  if (mask.rows() != n || mask.cols() != n)
    throw std::invalid_argument("attention: mask shape does not match token count");
}

template <typename Fn>
void for_each_head(std::size_t heads, unsigned jobs, Fn&& fn) {
  if (jobs <= 1 || heads <= 1) {
    for (std::size_t h = 0; h < heads; ++h) fn(h);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t n = std::min<std::size_t>(jobs, heads);
  for (std::size_t t = 0; t < n; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t h = t; h < heads; h += n) fn(h);
    });
}

}  // namespace

void ProjectedTokens::validate() const {
  if (q.d0 != k.d0 || q.d0 != v.d0 || q.d1 != k.d1 || q.d1 != v.d1 || q.d2 != k.d2 ||
      q.d2 != v.d2)
    throw std::invalid_argument("tokens: Q/K/V shape mismatch");
  if (q.d0 == 0 || q.d1 == 0 || q.d2 == 0) throw std::invalid_argument("tokens: empty tensor");
  for (const auto* a : {&q, &k, &v})
    for (double x : a->data)
      if (!std::isfinite(x)) throw std::invalid_argument("tokens: non-finite entry");
}

ProjectedTokens tokens_from_tensor(const Tensor& t) {
  require_rank(t, 4, "tokens");
  if (t.dim(0) != 3) throw FormatError("tokens: leading dim must be 3 (Q, K, V)");
  const std::size_t h = t.dim(1), n = t.dim(2), d = t.dim(3);
  ProjectedTokens p{Array3(h, n, d), Array3(h, n, d), Array3(h, n, d)};
  const std::size_t block = h * n * d;
  for (std::size_t i = 0; i < block; ++i) {
    p.q.data[i] = t.data[i];
    p.k.data[i] = t.data[block + i];
    p.v.data[i] = t.data[2 * block + i];
  }
  p.validate();
  return p;
}

Tensor tokens_to_tensor(const ProjectedTokens& p) {
  Tensor t({3, p.heads(), p.tokens(), p.head_dim()});
  const std::size_t block = p.q.data.size();
  for (std::size_t i = 0; i < block; ++i) {
    t.data[i] = static_cast<float>(p.q.data[i]);
    t.data[block + i] = static_cast<float>(p.k.data[i]);
    t.data[2 * block + i] = static_cast<float>(p.v.data[i]);
  }
  return t;
}

Tensor array_to_tensor(const Array3& a) {
  Tensor t({a.d0, a.d1, a.d2});
  for (std::size_t i = 0; i < a.data.size(); ++i) t.data[i] = static_cast<float>(a.data[i]);
  return t;
}

MaskMode parse_mask_mode(std::string_view name) {
  if (name == "mul_logits") return MaskMode::kMulLogits;
  if (name == "neg_inf") return MaskMode::kNegInf;
  if (name == "mul_probs") return MaskMode::kMulProbs;
  throw std::invalid_argument("unknown mask mode: " + std::string(name));
}

std::string_view mask_mode_name(MaskMode mode) {
  switch (mode) {
    case MaskMode::kMulLogits: return "mul_logits";
    case MaskMode::kNegInf: return "neg_inf";
    case MaskMode::kMulProbs: return "mul_probs";
  }
  return "?";
}

Array3 attention_scores(const ProjectedTokens& tokens) {
  tokens.validate();
  const std::size_t h = tokens.heads(), n = tokens.tokens();
  const double scale = 1.0 / std::sqrt(static_cast<double>(tokens.head_dim()));
  Array3 s(h, n, n);
  for (std::size_t hh = 0; hh < h; ++hh)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        s(hh, i, j) = dot(tokens.q.row(hh, i), tokens.k.row(hh, j)) * scale;
  return s;
}

void masked_softmax_row(std::span<const double> scores, std::span<const std::uint8_t> mask,
                        MaskMode mode, std::span<double> out) {
  const std::size_t n = scores.size();
  if (mask.size() != n || out.size() != n)
    throw std::invalid_argument("masked_softmax_row: length mismatch");

  switch (mode) {
    case MaskMode::kMulLogits: {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, mask[j] ? scores[j] : 0.0);
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        out[j] = std::exp((mask[j] ? scores[j] : 0.0) - mx);
        sum += out[j];
      }
      for (std::size_t j = 0; j < n; ++j) out[j] /= sum;
      return;
    }
    case MaskMode::kNegInf: {
      double mx = -std::numeric_limits<double>::infinity();
      bool any = false;
      for (std::size_t j = 0; j < n; ++j)
        if (mask[j]) {
          mx = any ? std::max(mx, scores[j]) : scores[j];
          any = true;
        }
      if (!any) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        out[j] = mask[j] ? std::exp(scores[j] - mx) : 0.0;
        sum += out[j];
      }
      for (std::size_t j = 0; j < n; ++j) out[j] /= sum;
      return;
    }
    case MaskMode::kMulProbs: {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, scores[j]);
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        out[j] = std::exp(scores[j] - mx);
        sum += out[j];
      }
      double kept = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        out[j] = mask[j] ? out[j] / sum : 0.0;
        kept += out[j];
      }
      if (kept == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
      }
      for (std::size_t j = 0; j < n; ++j) out[j] /= kept;
      return;
    }
  }
  throw std::invalid_argument("unknown mask mode");
}

Array3 apply_mask(const Array3& scores, const BinaryMatrix& mask, MaskMode mode) {
  if (scores.d1 != scores.d2) throw std::invalid_argument("apply_mask: scores must be square");
  check_mask_shape(mask, scores.d1);
  Array3 p(scores.d0, scores.d1, scores.d2);
  for (std::size_t h = 0; h < scores.d0; ++h)
    for (std::size_t i = 0; i < scores.d1; ++i)
      masked_softmax_row(scores.row(h, i), mask.row(i), mode, p.row(h, i));
  return p;
}

Array3 apply_mask(const Array3& scores, const AttentionMask& mask, MaskMode mode) {
  return apply_mask(scores, mask.dense(), mode);
}

namespace {

void attend_row(const ProjectedTokens& tokens, const BinaryMatrix& mask, MaskMode mode,
                std::size_t h, std::size_t i, double scale, std::vector<double>& s,
                std::vector<double>& p, std::span<double> out) {
  const std::size_t n = tokens.tokens();
  auto qi = tokens.q.row(h, i);
  for (std::size_t j = 0; j < n; ++j) s[j] = dot(qi, tokens.k.row(h, j)) * scale;
  masked_softmax_row(s, mask.row(i), mode, p);
  for (std::size_t j = 0; j < n; ++j) {
    if (p[j] == 0.0) continue;
    auto vj = tokens.v.row(h, j);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += p[j] * vj[c];
  }
}

}  // namespace

Array3 masked_attention(const ProjectedTokens& tokens, const BinaryMatrix& mask, MaskMode mode,
                        unsigned jobs) {
  tokens.validate();
  const std::size_t heads = tokens.heads(), n = tokens.tokens(), d = tokens.head_dim();
  check_mask_shape(mask, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Array3 out(heads, n, d);

  for_each_head(heads, jobs, [&](std::size_t h) {
    std::vector<double> s(n), p(n);
    for (std::size_t i = 0; i < n; ++i) attend_row(tokens, mask, mode, h, i, scale, s, p, out.row(h, i));
  });
  return out;
}

Array3 masked_attention_rows(const ProjectedTokens& tokens, const BinaryMatrix& mask,
                             MaskMode mode, std::span<const std::size_t> rows) {
  tokens.validate();
  const std::size_t heads = tokens.heads(), n = tokens.tokens(), d = tokens.head_dim();
  check_mask_shape(mask, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Array3 out(heads, rows.size(), d);
  std::vector<double> s(n), p(n);
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r] >= n) throw std::out_of_range("masked_attention_rows: row out of range");
      attend_row(tokens, mask, mode, h, rows[r], scale, s, p, out.row(h, r));
    }
  return out;
}

Array3 masked_attention(const ProjectedTokens& tokens, const AttentionMask& mask, MaskMode mode,
                        unsigned jobs) {
  return masked_attention(tokens, mask.dense(), mode, jobs);
}

}  // namespace mdma
