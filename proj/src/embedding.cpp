/* Copyright 2026 The balpack Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "balpack/concepts.hpp"
#include "balpack/error.hpp"

namespace balpack {

static_assert(std::numeric_limits<float>::is_iec559, "EMB1 requires IEEE-754 floats");

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::size_t kHeaderBytes = 12;

std::uint32_t read_u32_le(const std::byte* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_u32_le(std::vector<std::byte>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::byte>((v >> s) & 0xFF));
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (rows_ == 0 || dim_ == 0) throw Error("bad_shape", "embedding matrix must have rows >= 1 and dim >= 1");
  if (data_.size() != rows_ * dim_) {
    throw Error("bad_shape", "embedding data length " + std::to_string(data_.size()) +
                                 " != rows*dim " + std::to_string(rows_ * dim_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error("non_finite", "non-finite value at row " + std::to_string(i / dim_) + ", column " +
                                    std::to_string(i % dim_));
    }
  }
}

EmbeddingMatrix parse_embeddings(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error("bad_magic", "bad magic at byte offset 0: expected \"EMB1\"");
  }
  if (bytes.size() < kHeaderBytes) {
    throw Error("truncated", "truncated header at byte offset " + std::to_string(bytes.size()));
  }
  const std::uint64_t rows = read_u32_le(bytes.data() + 4);
  const std::uint64_t dim = read_u32_le(bytes.data() + 8);
  if (rows == 0 || dim == 0) throw Error("bad_shape", "header declares rows=" + std::to_string(rows) + " dim=" + std::to_string(dim));
  const std::uint64_t count = rows * dim;
  const std::uint64_t expected = kHeaderBytes + count * 4;
  if (bytes.size() < expected) {
    throw Error("truncated", "truncated payload at byte offset " + std::to_string(bytes.size()) +
                                 ": header declares " + std::to_string(count) + " floats (" +
                                 std::to_string(expected) + " bytes)");
  }
  if (bytes.size() > expected) {
    throw Error("trailing_bytes", "unexpected data at byte offset " + std::to_string(expected));
  }
  std::vector<float> data(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t offset = kHeaderBytes + i * 4;
    const float v = std::bit_cast<float>(read_u32_le(bytes.data() + offset));
    if (!std::isfinite(v)) {
      throw Error("non_finite", "non-finite value at byte offset " + std::to_string(offset));
    }
    data[i] = v;
  }
  return EmbeddingMatrix(rows, dim, std::move(data));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing_input", "cannot open: " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_embeddings(std::as_bytes(std::span(raw)));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::byte> serialize_embeddings(const EmbeddingMatrix& m) {
  if (m.rows() > UINT32_MAX || m.dim() > UINT32_MAX) throw Error("bad_shape", "matrix too large for EMB1");
  std::vector<std::byte> out;
  out.reserve(kHeaderBytes + m.data().size() * 4);
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  append_u32_le(out, static_cast<std::uint32_t>(m.rows()));
  append_u32_le(out, static_cast<std::uint32_t>(m.dim()));
  for (float v : m.data()) append_u32_le(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

void store_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  const auto bytes = serialize_embeddings(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("io_error", "write failed: " + path.string());
}

}  // namespace balpack
