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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dscl/pipeline.h"
#include "dscl/synth.h"

namespace dscl {

inline constexpr double kMomentum = 0.9;

struct MetricsRow {
  std::size_t step = 0;
  double loss_total = 0.0;
  double loss_ce = 0.0;
  double loss_pgcl = 0.0;
  double loss_sgcl = 0.0;
  // Filled on snapshot steps only.
  std::optional<double> miou_base;
  std::optional<double> miou_refined;
};

struct TrainResult {
  ModelState state;
  std::vector<MetricsRow> metrics;
};

// Scene indices for one step: consecutive slices of a per-epoch permutation
// drawn from (seed, epoch).
std::vector<std::size_t> batch_indices(std::uint64_t seed, std::size_t step, std::size_t batch, std::size_t count);

// v = momentum * v + g; p -= lr * v, for every parameter in order. With
// clip > 0 the gradients are first scaled so their global norm is at most clip.
void sgd_step(ModelState& state, const GradMap& grads, double lr, double clip = 0.0);

// Runs steps state.step + 1 .. cfg.steps. Starts from init_model(cfg) unless
// `resume` is given. Throws NumericalError naming the step and the loss term
// when a loss goes non-finite.
TrainResult train(const TrainConfig& cfg, const std::vector<Scene>& scenes, int classes,
                  const ModelState* resume = nullptr);

std::string metrics_csv(const std::vector<MetricsRow>& rows);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);

}  // namespace dscl
