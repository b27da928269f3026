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
#include <optional>
#include <string>
#include <vector>

#include "dscl/pipeline.h"
#include "dscl/run_config.h"

namespace dscl {

struct AblationCell {
  AblationMode mode = AblationMode::kBaseline;
  std::uint64_t seed = 0;
  std::optional<double> miou_base;     // unset when the run aborted
  std::optional<double> miou_refined;
  std::string error;                   // abort reason
};

struct AblationSummary {
  AblationMode mode = AblationMode::kBaseline;
  std::optional<double> median_base;
  std::optional<double> median_refined;
  std::size_t runs = 0;
  std::size_t aborted = 0;
};

struct AblationTable {
  std::vector<AblationCell> cells;        // seed-major, modes in kAllModes order
  std::vector<AblationSummary> summary;   // kAllModes order

  const AblationCell& cell(AblationMode mode, std::uint64_t seed) const;
  const AblationSummary& of(AblationMode mode) const;
};

// Median of a non-empty sample; mean of the two middle values for even sizes.
double median(std::vector<double> values);

// Every mode on every seed. Per seed one synthetic scene set is generated
// from (base.synth, seed) and shared by all modes; training uses
// base.train.for_mode(mode) with seed `seed`. `jobs` runs cells in parallel
// without changing results. Needs at least three seeds.
AblationTable run_ablation(const RunConfig& base, const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1);

// mode,seed,miou_base,miou_refined; aborted cells carry empty values.
std::string ablation_csv(const AblationTable& table);

}  // namespace dscl
