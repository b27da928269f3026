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

#include "dscl/cam_head.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dscl/errors.h"
#include "dscl/ops.h"
#include "dscl/rng.h"

namespace dscl {

CamWeights make_cam_weights(std::size_t classes, std::size_t depth, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xca11));
  auto init = [&](std::size_t rows, std::size_t cols) {
    const double bound = std::sqrt(3.0 / static_cast<double>(cols));
    std::vector<double> w(rows * cols);
    for (double& v : w) v = rng.uniform(-bound, bound);
    return Var::parameter(Tensor({rows, cols}, std::move(w)));
  };
  CamWeights cw;
  cw.base = init(classes, depth);
  cw.refined = init(classes, 2 * depth);
  // Refined row 0 is never read; see refined_weights().
  auto v = cw.refined.mutable_value().f64();
  std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(cw.refined.dim(1)), 0.0);
  return cw;
}

Var refined_weights(const CamWeights& cw) {
  const std::size_t k = cw.classes(), d = cw.base.dim(1);
  std::vector<std::size_t> rest(k - 1);
  std::iota(rest.begin(), rest.end(), std::size_t{1});
  const Var bg = concat_cols(gather_rows(cw.base, {0}), Var::constant(Tensor::zeros({1, d})));
  return k == 1 ? bg : concat_rows({bg, gather_rows(cw.refined, rest)});
}

namespace {

CamStack project(const FeatureMap& f, const Var& w, bool refined) {
  if (w.value().rank() != 2 || f.values.dim(1) != w.dim(1)) {
    throw ShapeError(std::string(refined ? "refined_cam" : "cam_forward") + ": feature depth " +
                     std::to_string(f.values.dim(1)) + " does not match class weights " + shape_string(w.shape()));
  }
  return CamStack{matmul_nt(f.values, w), f.height, f.width, refined};
}

}  // namespace

CamStack cam_forward(const FeatureMap& f, const Var& w_base) { return project(f, w_base, false); }

CamStack refined_cam(const FeatureMap& fhat, const Var& w_refined) {
  if (w_refined.value().rank() == 2 && w_refined.dim(1) % 2 != 0) {
    throw ShapeError("refined_cam: refined weights must have even depth 2D");
  }
  return project(fhat, w_refined, true);
}

PseudoLabelMap argmax_labels(const Tensor& scores, std::size_t height, std::size_t width,
                             const std::vector<int>& present_classes) {
  if (scores.rank() != 2 || scores.dim(0) != height * width) {
    throw ShapeError("pseudo_labels: scores " + shape_string(scores.shape()) + " do not cover " +
                     std::to_string(height) + "x" + std::to_string(width) + " pixels");
  }
  const std::size_t k = scores.dim(1);
  std::vector<int> allowed{0};
  for (int c : present_classes) {
    if (c < 0 || static_cast<std::size_t>(c) >= k) {
      throw ContractError("pseudo_labels: class " + std::to_string(c) + " outside 0.." + std::to_string(k - 1));
    }
    allowed.push_back(c);
  }
  std::sort(allowed.begin(), allowed.end());
  allowed.erase(std::unique(allowed.begin(), allowed.end()), allowed.end());

  auto s = scores.f64();
  std::vector<std::uint16_t> out(height * width);
  for (std::size_t p = 0; p < height * width; ++p) {
    int best = allowed[0];
    double best_score = s[p * k + best];
    // Strict comparison in ascending id order keeps the smallest id on ties.
    for (std::size_t i = 1; i < allowed.size(); ++i) {
      const double v = s[p * k + allowed[i]];
      if (v > best_score) {
        best_score = v;
        best = allowed[i];
      }
    }
    out[p] = static_cast<std::uint16_t>(best);
  }
  return PseudoLabelMap{Tensor({height, width}, std::move(out))};
}

PseudoLabelMap pseudo_labels(const CamStack& o, const std::vector<int>& present_classes) {
  return argmax_labels(o.scores.value(), o.height, o.width, present_classes);
}

PseudoLabelMap update_pseudo_labels(const CamStack& ohat, const std::vector<int>& present_classes) {
  return argmax_labels(ohat.scores.value(), ohat.height, ohat.width, present_classes);
}

Var classification_logits(const CamStack& o) { return mean_rows(o.scores); }

Var ce_loss(const Var& logits, const std::vector<int>& labels) {
  const std::size_t k = logits.value().size();
  if (k < 2) throw ContractError("ce_loss: needs at least one foreground class");
  std::vector<std::size_t> fg;
  std::vector<double> sign;
  for (std::size_t c = 1; c < k; ++c) {
    fg.push_back(c);
    const bool present = std::find(labels.begin(), labels.end(), static_cast<int>(c)) != labels.end();
    // -log sigma(z) for present classes, -log(1 - sigma(z)) = -log sigma(-z) otherwise.
    sign.push_back(present ? 1.0 : -1.0);
  }
  const Var column = reshape(logits, {k, 1});
  const Var signed_logits = mul(gather_rows(column, fg), Var::constant(Tensor({k - 1, 1}, std::move(sign))));
  return scale(mean(log_sigmoid(signed_logits)), -1.0);
}

}  // namespace dscl
