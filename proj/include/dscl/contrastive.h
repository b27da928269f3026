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

#include <span>
#include <vector>

#include "dscl/autograd.h"
#include "dscl/cam_head.h"

namespace dscl {

struct ContrastConfig {
  double tau = 0.1;
  double theta = 0.5;
  // false reproduces the literal form whose denominator holds negatives only.
  bool include_positive = true;

  void validate() const;
};

// exp(cos(u, v) / tau). Throws DegenerateVectorError on a zero vector.
double contrast_score(std::span<const double> u, std::span<const double> v, double tau);
// exp(cos(u, v / tau)): temperature written inside the cosine. Scale
// invariance of the cosine makes this independent of tau for tau > 0.
double contrast_score_literal(std::span<const double> u, std::span<const double> v, double tau);

// -log(phi(a, p) / (phi(a, p) [include_positive] + sum_n phi(a, n))).
// anchor and positive are [1 x D] or [D]; negatives [n x D], n >= 1.
Var info_nce(const Var& anchor, const Var& positive, const Var& negatives, const ContrastConfig& cfg);

// InfoNCE term read off a logit table: logits[pos] against logits[negs].
Var nce_term(const Var& logits, std::size_t pos, const std::vector<std::size_t>& negs, bool include_positive);

struct ImageGroups {
  Var prototypes;               // [G x D]
  std::vector<int> group_class; // length G
};

struct LossResult {
  Var loss;
  // No anchor had both a positive and a negative; loss is a constant 0.
  bool degenerate = false;
  std::size_t anchors = 0;
};

// Group contrast across the batch. For anchor (i, u) the positives are all
// other groups (j, v) with the same class, the negatives all groups with a
// different class. Per anchor the positives are averaged, per image the
// valid anchors, and finally the images that have one.
LossResult pgcl_loss(const std::vector<ImageGroups>& batch, const ContrastConfig& cfg);

struct SemanticMatrix {
  Var m;                   // [G x K], masked columns exactly 0
  std::vector<bool> keep;  // length K
};

// m[u, k] = softmax over kept k of cos(p_u, w_k) / tau. Background is always kept.
SemanticMatrix similarity_matrix(const Var& prototypes, const Var& class_embeddings,
                                 const std::vector<int>& present_classes, double tau);
// Same with an explicit column mask; at least one column must be kept.
SemanticMatrix similarity_matrix_masked(const Var& prototypes, const Var& class_embeddings, std::vector<bool> keep,
                                        double tau);

// r_k = mean of batch features whose pseudo label is k.
struct ClassPrototypeBank {
  Var prototypes;             // [K x D]; rows of absent classes are zero
  std::vector<bool> present;  // length K

  std::size_t present_count() const;
};

ClassPrototypeBank build_class_bank(const std::vector<Var>& features, const std::vector<PseudoLabelMap>& labels,
                                    std::size_t classes);

// s[u] = sum_k m[u, k] r_k. Throws ContractError if a kept class has no
// prototype in the bank.
Var semantic_consistency(const SemanticMatrix& m, const ClassPrototypeBank& bank);

// Anchor s[u], positive r_{class(u)}, negatives every other banked class.
// Mean over groups. Fewer than two banked classes gives 0 with the flag set.
LossResult sgcl_loss(const Var& s, const std::vector<int>& group_class, const ClassPrototypeBank& bank,
                     const ContrastConfig& cfg);

}  // namespace dscl
