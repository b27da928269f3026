// Copyright 2026 The DSCL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dscl/tensor_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dscl/errors.h"

namespace dscl {

namespace {

constexpr std::uint8_t kMagic[4] = {'D', 'S', 'T', '1'};
constexpr std::size_t kHeaderBytes = 8;

std::size_t element_bytes(DType dtype) {
  switch (dtype) {
    case DType::kFloat32:
      return 4;
    case DType::kFloat64:
      return 8;
    case DType::kUInt16:
      return 2;
  }
  return 0;
}

template <typename U>
void append_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

template <typename U>
U load_le(const std::uint8_t* p) {
  U v = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) v |= static_cast<U>(p[b]) << (8 * b);
  return v;
}

}  // namespace

void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) { append_le(out, v); }

std::uint64_t load_u64(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset + 8 > bytes.size()) throw FormatError("truncated u64", bytes.size());
  return load_le<std::uint64_t>(bytes.data() + offset);
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 8 * t.rank() + element_bytes(t.dtype()) * t.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(static_cast<std::uint8_t>(t.dtype()));
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  out.push_back(0);
  out.push_back(0);
  for (std::size_t d : t.shape()) append_le<std::uint64_t>(out, d);
  switch (t.dtype()) {
    case DType::kFloat64:
      for (double v : t.f64()) append_le(out, std::bit_cast<std::uint64_t>(v));
      break;
    case DType::kFloat32:
      for (float v : t.f32()) append_le(out, std::bit_cast<std::uint32_t>(v));
      break;
    case DType::kUInt16:
      for (std::uint16_t v : t.u16()) append_le(out, v);
      break;
  }
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes, std::size_t* offset) {
  const std::size_t base = *offset;
  if (bytes.size() < base + kHeaderBytes) {
    throw FormatError("truncated DST1 header", bytes.size());
  }
  const std::uint8_t* p = bytes.data() + base;
  if (std::memcmp(p, kMagic, 4) != 0) throw FormatError("bad DST1 magic", base);
  const std::uint8_t code = p[4];
  if (code < 1 || code > 3) {
    throw FormatError("unknown DST1 dtype code " + std::to_string(code), base + 4);
  }
  const auto dtype = static_cast<DType>(code);
  const std::size_t rank = p[5];
  if (p[6] != 0 || p[7] != 0) throw FormatError("nonzero DST1 padding", base + 6);

  std::size_t pos = base + kHeaderBytes;
  if (bytes.size() < pos + 8 * rank) throw FormatError("truncated DST1 extents", bytes.size());
  Shape shape(rank);
  std::size_t n = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    const std::uint64_t d = load_le<std::uint64_t>(bytes.data() + pos);
    if (d == 0) throw FormatError("zero DST1 extent", pos);
    shape[i] = static_cast<std::size_t>(d);
    n *= shape[i];
    pos += 8;
  }
  const std::size_t payload = n * element_bytes(dtype);
  if (bytes.size() - pos < payload) {
    throw FormatError("truncated DST1 payload: need " + std::to_string(payload) + " bytes",
                      bytes.size());
  }
  const std::uint8_t* q = bytes.data() + pos;
  *offset = pos + payload;
  switch (dtype) {
    case DType::kFloat64: {
      std::vector<double> data(n);
      for (std::size_t i = 0; i < n; ++i) data[i] = std::bit_cast<double>(load_le<std::uint64_t>(q + 8 * i));
      return Tensor(std::move(shape), std::move(data));
    }
    case DType::kFloat32: {
      std::vector<float> data(n);
      for (std::size_t i = 0; i < n; ++i) data[i] = std::bit_cast<float>(load_le<std::uint32_t>(q + 4 * i));
      return Tensor(std::move(shape), std::move(data));
    }
    case DType::kUInt16: {
      std::vector<std::uint16_t> data(n);
      for (std::size_t i = 0; i < n; ++i) data[i] = load_le<std::uint16_t>(q + 2 * i);
      return Tensor(std::move(shape), std::move(data));
    }
  }
  throw FormatError("unreachable dtype", base + 4);
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  std::size_t offset = 0;
  Tensor t = decode_tensor(bytes, &offset);
  if (offset != bytes.size()) throw FormatError("trailing bytes after DST1 payload", offset);
  return t;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + " for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_file_bytes(path, encode_tensor(t));
}

Tensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file_bytes(path)); }

}  // namespace dscl
