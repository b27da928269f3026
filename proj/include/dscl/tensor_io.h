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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dscl/tensor.h"

namespace dscl {

// DST1 tensor file:
//   bytes 0-3   magic "DST1"
//   byte  4     dtype code (1 = float32, 2 = float64, 3 = uint16)
//   byte  5     rank r
//   bytes 6-7   zero
//   r x u64     extents, little-endian
//   payload     row-major, little-endian
// Rank-0 tensors carry no extents and a single element.

std::vector<std::uint8_t> encode_tensor(const Tensor& t);

// Decodes one tensor starting at `*offset` and advances it past the payload.
// Offsets in FormatError are absolute positions within `bytes`.
Tensor decode_tensor(std::span<const std::uint8_t> bytes, std::size_t* offset);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// Little-endian helpers shared with the checkpoint container.
void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
std::uint64_t load_u64(std::span<const std::uint8_t> bytes, std::size_t offset);

}  // namespace dscl
