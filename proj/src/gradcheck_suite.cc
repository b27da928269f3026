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

#include "dscl/gradcheck_suite.h"

#include "dscl/pipeline.h"
#include "dscl/rng.h"

namespace dscl {

std::vector<GradCheckCase> run_gradcheck(std::uint64_t seed, double tol, const GradCheckSetup& setup) {
  Rng rng(derive_seed(seed, 0x9c4e));
  const std::size_t v = setup.height * setup.width, d = setup.depth;
  std::vector<FeatureMap> features;
  std::vector<std::vector<int>> present;
  for (std::size_t i = 0; i < setup.images; ++i) {
    std::vector<double> x(v * d);
    for (double& e : x) e = rng.normal();
    features.push_back(FeatureMap{Var::parameter(Tensor({v, d}, std::move(x))), setup.height, setup.width});
    std::vector<int> labels;
    for (int c = 1; c < setup.classes; ++c) labels.push_back(c);
    present.push_back(labels);
  }
  CamWeights cam = make_cam_weights(static_cast<std::size_t>(setup.classes), d, derive_seed(seed, 0xca4));

  TrainConfig cfg;
  cfg.depth = d;
  cfg.mode = AblationMode::kM4;
  const std::vector<ImageStructure> structure = analyze_batch(features, present, cam.base, cfg, derive_seed(seed, 1));

  std::vector<NamedParam> feats;
  for (std::size_t i = 0; i < features.size(); ++i) feats.push_back({"f" + std::to_string(i), features[i].values});

  struct Term {
    const char* name;
    AblationMode mode;
    bool base_head;
    bool refined_head;
  };
  const Term terms[] = {{"ce", AblationMode::kBaseline, true, false},
                        {"pgcl", AblationMode::kM1, false, false},
                        {"sgcl", AblationMode::kM2, true, false},
                        {"total", AblationMode::kM4, true, true}};
  std::vector<GradCheckCase> out;
  for (const Term& t : terms) {
    TrainConfig c = cfg.for_mode(t.mode);
    c.alpha = cfg.alpha;
    c.beta = cfg.beta;
    auto loss = [&, t, c]() -> Var {
      const BatchOutput o = forward_features(features, structure, cam, c);
      if (t.mode == AblationMode::kBaseline) return o.losses.ce;
      if (t.mode == AblationMode::kM1) return o.losses.pgcl;
      if (t.mode == AblationMode::kM2) return o.losses.sgcl;
      return o.losses.total;
    };
    std::vector<NamedParam> params = feats;
    if (t.base_head) params.push_back({"cam.base", cam.base});
    if (t.refined_head) params.push_back({"cam.refined", cam.refined});
    out.push_back({t.name, finite_diff_check(loss, params, setup.eps, tol)});
  }
  return out;
}

}  // namespace dscl
