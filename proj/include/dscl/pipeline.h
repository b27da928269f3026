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

#include "dscl/autograd.h"
#include "dscl/cam_head.h"
#include "dscl/context_grouping.h"
#include "dscl/contrastive.h"
#include "dscl/encoder.h"
#include "dscl/grad_check.h"
#include "dscl/synth.h"

namespace dscl {

enum class AblationMode { kBaseline, kM1, kM2, kM3, kM4 };

const char* mode_name(AblationMode mode);
// Accepts baseline, M1..M4 (case-insensitive). Throws ConfigError otherwise.
AblationMode parse_mode(const std::string& name);
inline constexpr AblationMode kAllModes[] = {AblationMode::kBaseline, AblationMode::kM1, AblationMode::kM2,
                                             AblationMode::kM3, AblationMode::kM4};

struct TrainConfig {
  double alpha = 0.6;  // PGCL weight
  double beta = 0.4;   // SGCL weight
  double tau = 0.3;
  double theta = 0.5;
  double lr = 0.05;
  // Bound on the global gradient norm per step; 0 disables clipping.
  double clip = 1.0;
  std::size_t steps = 500;
  std::size_t batch = 4;
  std::uint64_t seed = 0;
  AblationMode mode = AblationMode::kM4;
  std::size_t depth = 32;
  bool background_group = true;
  bool include_positive = true;
  // mIoU snapshot period in steps; 0 evaluates only after the last step.
  std::size_t eval_every = 100;
  // Worker threads for the per-image structural pass.
  std::size_t threads = 1;

  bool uses_pgcl() const { return mode != AblationMode::kBaseline && mode != AblationMode::kM2; }
  bool uses_sgcl() const { return mode != AblationMode::kBaseline && mode != AblationMode::kM1; }
  bool refines() const { return mode == AblationMode::kM4; }
  ContrastConfig contrast() const { return ContrastConfig{tau, theta, include_positive}; }
  EncoderConfig encoder() const;

  // Ranges only (weights >= 0, tau, batch >= 2, depth >= 2).
  void validate_ranges() const;
  // Ranges plus the mode constraints: baseline has no contrast weights,
  // M1 has beta = 0, M2 has alpha = 0, M3 and M4 have both positive.
  void validate() const;
  // Copy with the loss weights the given mode expects, taken from this config.
  TrainConfig for_mode(AblationMode m) const;
};

struct ModelState {
  TinyEncoder encoder;
  CamWeights cam;
  std::vector<Tensor> momentum;  // one per parameter, same order as parameters()
  std::size_t step = 0;
  std::uint64_t seed = 0;

  std::vector<NamedParam> parameters() const;
};

ModelState init_model(const TrainConfig& cfg, int classes);
// Deep copy; the result shares no nodes with `s`.
ModelState clone_model(const ModelState& s);

// f~ = softmax_rows(f C^T) S.
Var refine_features(const Var& f, const Var& c, const Var& s);
// [f, f~] along channels, original first.
Var concat_features(const Var& f, const Var& ftilde);
// alpha * lp + beta * ls + lce.
Var total_loss(const Var& lp, const Var& ls, const Var& lce, double alpha, double beta);

// Non-differentiated per-image state, fixed for one step.
struct ImageStructure {
  std::vector<int> present;   // image-level labels
  PseudoLabelMap labels;      // base pseudo labels
  Tensor context_weights;     // [V x V] softmax of the affinity; unset without grouping
  GroupSet groups;            // unset without grouping
  bool grouped = false;
};

struct BatchLosses {
  Var total;
  Var ce;
  Var pgcl;
  Var sgcl;
};

struct BatchOutput {
  BatchLosses losses;
  std::vector<CamStack> base;
  std::vector<CamStack> refined;  // equals base outside M4
  std::vector<PseudoLabelMap> base_labels;
  std::vector<PseudoLabelMap> refined_labels;
  std::vector<ImageStructure> structure;
  bool pgcl_degenerate = false;
  bool sgcl_degenerate = false;
  std::size_t pgcl_anchors = 0;
  std::size_t sgcl_anchors = 0;
};

// Pseudo labels, affinity weights, clusters and group classes per image.
// Grouping is skipped when the mode needs none. Image i clusters with
// derive_seed(seed, i).
std::vector<ImageStructure> analyze_batch(const std::vector<FeatureMap>& features,
                                          const std::vector<std::vector<int>>& present, const Var& w_base,
                                          const TrainConfig& cfg, std::uint64_t seed);

// Differentiable pass over fixed structure.
BatchOutput forward_features(const std::vector<FeatureMap>& features, const std::vector<ImageStructure>& structure,
                             const CamWeights& cam, const TrainConfig& cfg);

// Encoder, structural pass and differentiable pass on a batch of scenes.
BatchOutput forward_batch(const ModelState& state, const std::vector<const Scene*>& batch, const TrainConfig& cfg,
                          std::uint64_t seed);

}  // namespace dscl
