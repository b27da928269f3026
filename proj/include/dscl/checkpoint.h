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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dscl/pipeline.h"
#include "dscl/run_config.h"

namespace dscl {

// Container layout:
//   repeated { u64 name length, UTF-8 name, DST1 tensor }
//   u64 0                      end of tensors
//   u64 metadata length, UTF-8 "key = value" lines (step, strides, config)
struct Checkpoint {
  ModelState state;
  RunConfig config;
};

std::vector<std::uint8_t> encode_checkpoint(const ModelState& state, const RunConfig& config);
// Throws FormatError on a malformed container.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelState& state, const RunConfig& config);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dscl
