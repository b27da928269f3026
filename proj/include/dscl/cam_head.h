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
#include <vector>

#include "dscl/autograd.h"
#include "dscl/encoder.h"
#include "dscl/tensor.h"

namespace dscl {

// Class-aware 1x1 convolutions. Row k is the embedding of class k; row 0 is
// background. The base and refined heads are independent weights.
struct CamWeights {
  Var base;     // [K x D]
  Var refined;  // [K x 2D]

  std::size_t classes() const { return base.dim(0); }
};

CamWeights make_cam_weights(std::size_t classes, std::size_t depth, std::uint64_t seed);

// Weights applied to [f, f~]. Background gets no classification loss, so its
// refined row would never train; it reuses the base row, zero on f~.
Var refined_weights(const CamWeights& cw);

struct CamStack {
  Var scores;  // [(H*W) x K]
  std::size_t height = 0;
  std::size_t width = 0;
  bool refined = false;

  std::size_t classes() const { return scores.dim(1); }
};

struct PseudoLabelMap {
  Tensor labels;  // [H x W] uint16
};

// scores[p, k] = <f[p], w_k>.
CamStack cam_forward(const FeatureMap& f, const Var& w_base);
// Same contract on the concatenated [f, f~] features of depth 2D.
CamStack refined_cam(const FeatureMap& fhat, const Var& w_refined);

// Per-pixel argmax over present_classes plus background; ties go to the
// smallest id.
PseudoLabelMap pseudo_labels(const CamStack& o, const std::vector<int>& present_classes);
PseudoLabelMap update_pseudo_labels(const CamStack& ohat, const std::vector<int>& present_classes);
// Same rule on raw [(H*W) x K] scores.
PseudoLabelMap argmax_labels(const Tensor& scores, std::size_t height, std::size_t width,
                             const std::vector<int>& present_classes);

// Global average pool over pixels, one logit per class.
Var classification_logits(const CamStack& o);

// Mean over classes 1..K-1 of logistic binary cross-entropy with target 1
// for classes in `labels`. Background never contributes.
Var ce_loss(const Var& logits, const std::vector<int>& labels);

}  // namespace dscl
