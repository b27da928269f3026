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
#include <string>
#include <vector>

#include "dscl/tensor.h"

namespace dscl {

// Background is class 0 everywhere.
inline constexpr int kBackground = 0;

struct SynthConfig {
  std::size_t width = 32;
  std::size_t height = 32;
  int classes = 4;  // K, including background
  int min_blobs = 1;
  int max_blobs = 2;
  double noise_sigma = 0.05;
  // Blob radius as a fraction of the shorter image side.
  double min_radius = 0.14;
  double max_radius = 0.26;
  int max_retries = 200;

  // Throws ConfigError on out-of-range fields.
  void validate() const;
};

struct Scene {
  Tensor image;              // [H, W, 3] float64 in [0, 1]
  Tensor gt_mask;            // [H, W] uint16 class ids; evaluation only
  std::vector<int> labels;   // image-level labels, sorted, background excluded
};

// Colored blobs (one color family and shape per class) on a textured
// background. Pure in (cfg, seed).
Scene generate_scene(const SynthConfig& cfg, std::uint64_t seed);

// Class ids other than background present in a mask, sorted.
std::vector<int> mask_classes(const Tensor& mask);

std::vector<Scene> generate_scenes(const SynthConfig& cfg, std::uint64_t seed, std::size_t count);

}  // namespace dscl
