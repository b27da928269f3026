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

namespace dscl {

enum class BenchVariant { kPixelwise, kGrouped };

const char* variant_name(BenchVariant v);

struct BenchSize {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t pixels() const { return width * height; }
  std::string label() const;  // "WxH"
};

// "64x64" or "64" (square).
BenchSize parse_bench_size(const std::string& text);

struct BenchRecord {
  BenchSize size;
  std::size_t groups = 0;
  BenchVariant variant = BenchVariant::kPixelwise;
  double median_seconds = 0.0;
  std::uint64_t pairs = 0;
};

// Same-image pixel pairs, V (V - 1) / 2 per image.
std::uint64_t pixel_pair_count(std::size_t pixels, std::size_t images);
// Pairs among all groups of the batch, T (T - 1) / 2 with T = images * groups.
std::uint64_t group_pair_count(std::size_t groups, std::size_t images);

struct BenchConfig {
  std::size_t images = 2;    // per iteration
  std::size_t depth = 32;
  double tau = 0.1;
  double theta = 0.5;
  std::uint64_t seed = 0;
};

// One timed iteration of each variant on random float32 embeddings.
// Pixelwise: Pearson positive sets and InfoNCE over every same-image pixel
// pair, forward and backward to the embeddings. Grouped: affinity, context,
// k-means, prototypes and the group contrast, forward and backward.
// Both return the loss so the work cannot be elided.
double pixelwise_iteration(const std::vector<std::vector<float>>& features, std::size_t depth, const BenchConfig& cfg,
                           std::vector<std::vector<float>>* grads = nullptr);
double grouped_iteration(const std::vector<std::vector<float>>& features, std::size_t depth, std::size_t groups,
                         const BenchConfig& cfg, std::vector<std::vector<float>>* grads = nullptr);

// Median wall time over `repeats` (>= 3) iterations per (size, G, variant).
// The pixelwise variant does not depend on G and is timed once per size
// with groups = 0.
std::vector<BenchRecord> bench_contrast(const std::vector<BenchSize>& sizes, const std::vector<std::size_t>& groups,
                                        std::size_t repeats, const BenchConfig& cfg = {});

// resolution,G,variant,median_seconds,pairs
std::string bench_csv(const std::vector<BenchRecord>& records);

}  // namespace dscl
