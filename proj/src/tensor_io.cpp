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

#include "mdma/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace mdma {
namespace {

constexpr char kMagic[4] = {'F', 'M', 'T', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{in[at + i]} << (8 * i);
  return v;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims, float fill) : shape(std::move(dims)) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  data.assign(n, fill);
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.rank() < 1 || t.rank() > kMaxTensorRank)
    throw FormatError("bad ndim: " + std::to_string(t.rank()));
  std::uint64_t n = 1;
  for (auto d : t.shape) {
    if (d == 0 || d > 0xFFFFFFFFu) throw FormatError("dim overflow");
    n *= d;
    if (n > kMaxTensorElements) throw FormatError("dim overflow");
  }
  if (n != t.data.size()) throw FormatError("shape does not match data length");

  std::vector<std::uint8_t> out;
  out.reserve(8 + 4 * t.rank() + 4 * t.data.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
  for (float f : t.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("bad magic");
  const std::uint32_t ndim = get_u32(bytes, 4);
  if (ndim < 1 || ndim > kMaxTensorRank) throw FormatError("bad ndim: " + std::to_string(ndim));
  if (bytes.size() < 8 + 4 * std::size_t{ndim}) throw FormatError("truncated header");

  Tensor t;
  std::uint64_t n = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    const std::uint32_t d = get_u32(bytes, 8 + 4 * i);
    if (d == 0) throw FormatError("zero dim");
    n *= d;
    if (n > kMaxTensorElements) throw FormatError("dim overflow");
    t.shape.push_back(d);
  }
  const std::size_t header = 8 + 4 * std::size_t{ndim};
  const std::uint64_t payload = n * 4;
  if (bytes.size() - header < payload) throw FormatError("truncated payload");
  if (bytes.size() - header > payload) throw FormatError("trailing bytes");

  t.data.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    t.data[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
  return t;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Tensor read_tensor(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  try {
    return decode_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_file_atomic(path, encode_tensor(t));
}

void require_binary(const Tensor& t) {
  for (float f : t.data)
    if (f != 0.0f && f != 1.0f) throw FormatError("non-binary mask value");
}

void require_rank(const Tensor& t, std::size_t rank, const std::string& what) {
  if (t.rank() != rank) {
    std::ostringstream os;
    os << what << ": expected rank " << rank << ", got " << t.rank();
    throw FormatError(os.str());
  }
}

}  // namespace mdma
