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
#include "dscl/cam_head.h"
#include "dscl/tensor.h"

namespace dscl {

// The V x V affinity is per-image scratch; V is capped to keep it bounded.
inline constexpr std::size_t kMaxAffinityPixels = 4096;

// a[u, v] = Pearson correlation of pixel embeddings f_u and f_v.
struct AffinityMatrix {
  Tensor a;  // [V x V], symmetric, unit diagonal

  std::size_t pixels() const { return a.dim(0); }
};

struct GroupSet {
  std::vector<int> assignment;  // length V, values in [0, G)
  Tensor prototypes;            // [G x D] feature-space means
  std::vector<int> group_class;
  std::size_t groups = 0;
  // Within-cluster SSE on the augmented vectors after every update.
  std::vector<double> objective_trace;

  std::vector<std::size_t> sizes() const;
};

struct ContextBundle {
  Tensor per_pixel;  // [V x D]
  Tensor per_group;  // [G x D]
  std::vector<std::vector<std::size_t>> positive_sets;
  double theta = 0.5;
};

// f: [V x D] with D >= 2. Zero-variance pixels get affinity 0 to every other
// pixel and 1 to themselves. Throws ConfigError when V exceeds the cap.
AffinityMatrix pixel_affinity(const Tensor& f);

// Row-wise softmax of the affinity, used as aggregation weights.
Tensor affinity_weights(const AffinityMatrix& a);

// perPixel[u] = sum_v softmax(a[u, :])[v] * f_v. Differentiable in f; the
// affinity is a constant within a step.
Var pixel_context(const Var& f, const AffinityMatrix& a);
Var pixel_context_weighted(const Var& f, const Tensor& weights);

// {v : a[u, v] >= theta}; always contains u.
std::vector<std::size_t> positive_set(const AffinityMatrix& a, std::size_t u, double theta = 0.5);

// k-means on [f_u ; ctx_u] with k-means++ seeding from `seed`. At most 100
// Lloyd iterations, stopping once no centroid moves by 1e-4 or more. An empty
// cluster takes the farthest member of the current largest cluster.
GroupSet cluster_pixels(const Tensor& f, const Tensor& ctx, std::size_t groups, std::uint64_t seed);

// Row u = mean of ctx over members of group u (C_i).
Var group_context(const Var& ctx, const GroupSet& g);
// Row u = mean of features over members of group u; gradients reach f.
Var group_prototypes(const Var& f, const GroupSet& g);

// Majority pseudo label inside each group, restricted to present_classes
// plus background; ties go to the smaller id.
std::vector<int> assign_group_classes(const GroupSet& g, const PseudoLabelMap& y,
                                      const std::vector<int>& present_classes);

ContextBundle build_context_bundle(const Tensor& f, const AffinityMatrix& a, const GroupSet& g, double theta);

}  // namespace dscl
