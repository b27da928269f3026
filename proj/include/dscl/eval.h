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

#include <optional>
#include <vector>

#include "dscl/cam_head.h"
#include "dscl/manifest.h"
#include "dscl/pipeline.h"
#include "dscl/tensor.h"

namespace dscl {

struct IoUReport {
  // Unset for classes absent from both maps.
  std::vector<std::optional<double>> per_class;
  double miou = 0.0;
  std::vector<int> defined_classes;
};

// Intersection and union counts per class, summed over any number of maps.
class IoUAccumulator {
 public:
  explicit IoUAccumulator(std::size_t classes);
  // pred and gt are [H x W] uint16 of equal shape with ids < K.
  void add(const Tensor& pred, const Tensor& gt);
  IoUReport report() const;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> inter_;
  std::vector<std::uint64_t> uni_;
};

IoUReport miou(const PseudoLabelMap& pred, const Tensor& gt, std::size_t classes);

// Nearest-neighbour resize of a label map to [height x width].
Tensor upsample_labels(const Tensor& labels, std::size_t height, std::size_t width);

struct EvalResult {
  IoUReport base;
  IoUReport refined;
  std::vector<PseudoLabelMap> base_labels;     // at feature resolution, one per scene
  std::vector<PseudoLabelMap> refined_labels;
};

// Pseudo labels for every scene, in batches of cfg.batch, scored against
// the ground-truth masks. Deterministic in (state, scenes, cfg).
EvalResult evaluate(const ModelState& state, const std::vector<Scene>& scenes, int classes, const TrainConfig& cfg);

}  // namespace dscl
