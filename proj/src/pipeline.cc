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

#include "dscl/pipeline.h"

#include <algorithm>
#include <cctype>
#include <thread>

#include "dscl/errors.h"
#include "dscl/ops.h"
#include "dscl/rng.h"

namespace dscl {

const char* mode_name(AblationMode mode) {
  switch (mode) {
    case AblationMode::kBaseline: return "baseline";
    case AblationMode::kM1: return "M1";
    case AblationMode::kM2: return "M2";
    case AblationMode::kM3: return "M3";
    case AblationMode::kM4: return "M4";
  }
  return "?";
}

AblationMode parse_mode(const std::string& name) {
  std::string s = name;
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "baseline") return AblationMode::kBaseline;
  if (s == "m1") return AblationMode::kM1;
  if (s == "m2") return AblationMode::kM2;
  if (s == "m3") return AblationMode::kM3;
  if (s == "m4") return AblationMode::kM4;
  throw ConfigError("unknown mode '" + name + "' (expected baseline, M1, M2, M3 or M4)");
}

EncoderConfig TrainConfig::encoder() const {
  EncoderConfig e;
  e.widths = {16, 32, depth};
  return e;
}

void TrainConfig::validate_ranges() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("alpha and beta must be >= 0");
  contrast().validate();
  if (!(lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (!(clip >= 0.0)) throw ConfigError("clip must be >= 0");
  if (batch < 2) throw ConfigError("batch must be >= 2");
  if (depth < 2) throw ConfigError("depth must be >= 2");
}

void TrainConfig::validate() const {
  validate_ranges();
  switch (mode) {
    case AblationMode::kBaseline:
      if (alpha != 0.0 || beta != 0.0) throw ConfigError("mode baseline needs alpha = beta = 0");
      break;
    case AblationMode::kM1:
      if (beta != 0.0) throw ConfigError("mode M1 needs beta = 0");
      if (!(alpha > 0.0)) throw ConfigError("mode M1 needs alpha > 0");
      break;
    case AblationMode::kM2:
      if (alpha != 0.0) throw ConfigError("mode M2 needs alpha = 0");
      if (!(beta > 0.0)) throw ConfigError("mode M2 needs beta > 0");
      break;
    case AblationMode::kM3:
    case AblationMode::kM4:
      if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError(std::string("mode ") + mode_name(mode) +
                                                             " needs alpha > 0 and beta > 0");
      break;
  }
}

TrainConfig TrainConfig::for_mode(AblationMode m) const {
  TrainConfig c = *this;
  c.mode = m;
  if (m == AblationMode::kBaseline || m == AblationMode::kM2) c.alpha = 0.0;
  if (m == AblationMode::kBaseline || m == AblationMode::kM1) c.beta = 0.0;
  return c;
}

std::vector<NamedParam> ModelState::parameters() const {
  std::vector<NamedParam> out;
  for (std::size_t i = 0; i < encoder.stages.size(); ++i) {
    out.push_back({"encoder." + std::to_string(i) + ".weight", encoder.stages[i].weight});
    out.push_back({"encoder." + std::to_string(i) + ".bias", encoder.stages[i].bias});
  }
  out.push_back({"cam.base", cam.base});
  out.push_back({"cam.refined", cam.refined});
  return out;
}

ModelState init_model(const TrainConfig& cfg, int classes) {
  if (classes < 2) throw ConfigError("init_model: need at least two classes");
  ModelState s;
  s.seed = cfg.seed;
  s.encoder = make_encoder(cfg.encoder(), derive_seed(cfg.seed, 0xe4c0de));
  s.cam = make_cam_weights(static_cast<std::size_t>(classes), s.encoder.depth(), derive_seed(cfg.seed, 0xca4));
  for (const NamedParam& p : s.parameters()) s.momentum.push_back(Tensor::zeros(p.var.shape()));
  return s;
}

ModelState clone_model(const ModelState& s) {
  ModelState c = s;
  for (ConvStage& st : c.encoder.stages) {
    st.weight = Var::parameter(st.weight.value());
    st.bias = Var::parameter(st.bias.value());
  }
  c.cam.base = Var::parameter(s.cam.base.value());
  c.cam.refined = Var::parameter(s.cam.refined.value());
  return c;
}

Var refine_features(const Var& f, const Var& c, const Var& s) {
  if (f.value().rank() != 2 || c.value().rank() != 2 || s.value().rank() != 2 || f.dim(1) != c.dim(1) ||
      c.dim(0) != s.dim(0) || s.dim(1) != f.dim(1)) {
    throw ShapeError("refine_features: f " + shape_string(f.shape()) + ", C " + shape_string(c.shape()) + ", S " +
                     shape_string(s.shape()) + " are inconsistent");
  }
  return matmul(softmax_rows(matmul_nt(f, c)), s);
}

Var concat_features(const Var& f, const Var& ftilde) {
  if (f.value().rank() != 2 || ftilde.value().rank() != 2 || f.dim(0) != ftilde.dim(0)) {
    throw ShapeError("concat_features: " + shape_string(f.shape()) + " and " + shape_string(ftilde.shape()));
  }
  return concat_cols(f, ftilde);
}

Var total_loss(const Var& lp, const Var& ls, const Var& lce, double alpha, double beta) {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ContractError("total_loss: weights must be >= 0");
  return add_n({scale(lp, alpha), scale(ls, beta), lce});
}

namespace {

std::size_t group_count(const std::vector<int>& present, const TrainConfig& cfg) {
  return present.size() + (cfg.background_group ? 1 : 0);
}

ImageStructure analyze_image(const FeatureMap& f, const std::vector<int>& present, const Var& w_base,
                             const TrainConfig& cfg, std::uint64_t seed) {
  ImageStructure s;
  s.present = present;
  const Tensor& fv = f.values.value();
  std::vector<double> scores(f.pixels() * w_base.dim(0));
  gemm_nt(fv.f64(), w_base.value().f64(), scores, f.pixels(), w_base.dim(0), fv.dim(1));
  s.labels = argmax_labels(Tensor({f.pixels(), w_base.dim(0)}, std::move(scores)), f.height, f.width, present);
  if (cfg.mode == AblationMode::kBaseline) return s;

  s.context_weights = affinity_weights(pixel_affinity(fv));
  const std::size_t v = f.pixels(), d = fv.dim(1);
  std::vector<double> ctx(v * d, 0.0);
  {
    auto w = s.context_weights.f64();
    auto x = fv.f64();
    for (std::size_t u = 0; u < v; ++u)
      for (std::size_t q = 0; q < v; ++q) {
        const double a = w[u * v + q];
        for (std::size_t j = 0; j < d; ++j) ctx[u * d + j] += a * x[q * d + j];
      }
  }
  const std::size_t g = group_count(present, cfg);
  if (g == 0) throw ContractError("analyze_batch: image without labels and no background group");
  s.groups = cluster_pixels(fv, Tensor({v, d}, std::move(ctx)), g, seed);
  s.groups.group_class = assign_group_classes(s.groups, s.labels, present);
  s.grouped = true;
  return s;
}

Var zero() { return Var::constant(Tensor::scalar(0.0)); }

Var average(const std::vector<Var>& terms) {
  return scale(add_n(terms), 1.0 / static_cast<double>(terms.size()));
}

}  // namespace

std::vector<ImageStructure> analyze_batch(const std::vector<FeatureMap>& features,
                                          const std::vector<std::vector<int>>& present, const Var& w_base,
                                          const TrainConfig& cfg, std::uint64_t seed) {
  if (features.size() != present.size()) throw ContractError("analyze_batch: one label set per image");
  std::vector<ImageStructure> out(features.size());
  auto run = [&](std::size_t i) { out[i] = analyze_image(features[i], present[i], w_base, cfg, derive_seed(seed, i)); };
  const std::size_t workers = std::min(cfg.threads, features.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < features.size(); ++i) run(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < features.size(); i += workers) run(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

BatchOutput forward_features(const std::vector<FeatureMap>& features, const std::vector<ImageStructure>& structure,
                             const CamWeights& cam, const TrainConfig& cfg) {
  if (features.size() != structure.size() || features.empty()) {
    throw ContractError("forward_features: structure does not match the batch");
  }
  const std::size_t n = features.size();
  const std::size_t k = cam.classes();
  const ContrastConfig cc = cfg.contrast();
  BatchOutput out;
  out.structure = structure;

  std::vector<Var> ce_base;
  for (std::size_t i = 0; i < n; ++i) {
    out.base.push_back(cam_forward(features[i], cam.base));
    out.base_labels.push_back(pseudo_labels(out.base.back(), structure[i].present));
    ce_base.push_back(ce_loss(classification_logits(out.base.back()), structure[i].present));
  }

  const bool grouped = cfg.mode != AblationMode::kBaseline;
  std::vector<Var> protos(n);
  if (grouped) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!structure[i].grouped) throw ContractError("forward_features: mode needs grouped structure");
      protos[i] = group_prototypes(features[i].values, structure[i].groups);
    }
  }

  Var pgcl = zero();
  if (cfg.uses_pgcl()) {
    std::vector<ImageGroups> batch;
    for (std::size_t i = 0; i < n; ++i) batch.push_back({protos[i], structure[i].groups.group_class});
    LossResult r = pgcl_loss(batch, cc);
    pgcl = r.loss;
    out.pgcl_degenerate = r.degenerate;
    out.pgcl_anchors = r.anchors;
  }

  Var sgcl = zero();
  std::vector<Var> semantic(n);
  if (cfg.uses_sgcl() || cfg.refines()) {
    std::vector<Var> fs;
    std::vector<PseudoLabelMap> ls;
    for (std::size_t i = 0; i < n; ++i) {
      fs.push_back(features[i].values);
      ls.push_back(structure[i].labels);
    }
    const ClassPrototypeBank bank = build_class_bank(fs, ls, k);
    std::vector<Var> terms;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<bool> keep(k, false);
      keep[0] = bank.present[0];
      for (int c : structure[i].present) keep[c] = bank.present[c];
      const SemanticMatrix m = similarity_matrix_masked(protos[i], cam.base, keep, cfg.tau);
      semantic[i] = semantic_consistency(m, bank);
      if (!cfg.uses_sgcl()) continue;
      LossResult r = sgcl_loss(semantic[i], structure[i].groups.group_class, bank, cc);
      out.sgcl_anchors += r.anchors;
      if (!r.degenerate) terms.push_back(r.loss);
    }
    if (cfg.uses_sgcl()) {
      if (terms.empty()) {
        out.sgcl_degenerate = true;
      } else {
        sgcl = average(terms);
      }
    }
  }

  Var ce = average(ce_base);
  if (cfg.refines()) {
    std::vector<Var> ce_refined;
    const Var wr = refined_weights(cam);
    for (std::size_t i = 0; i < n; ++i) {
      const Var ctx = pixel_context_weighted(features[i].values, structure[i].context_weights);
      const Var c = group_context(ctx, structure[i].groups);
      const Var fhat = concat_features(features[i].values, refine_features(features[i].values, c, semantic[i]));
      out.refined.push_back(refined_cam(FeatureMap{fhat, features[i].height, features[i].width}, wr));
      out.refined_labels.push_back(update_pseudo_labels(out.refined.back(), structure[i].present));
      ce_refined.push_back(ce_loss(classification_logits(out.refined.back()), structure[i].present));
    }
    ce = scale(add(ce, average(ce_refined)), 0.5);
  } else {
    out.refined = out.base;
    out.refined_labels = out.base_labels;
  }

  out.losses = BatchLosses{total_loss(pgcl, sgcl, ce, cfg.alpha, cfg.beta), ce, pgcl, sgcl};
  return out;
}

BatchOutput forward_batch(const ModelState& state, const std::vector<const Scene*>& batch, const TrainConfig& cfg,
                          std::uint64_t seed) {
  std::vector<FeatureMap> features;
  std::vector<std::vector<int>> present;
  for (const Scene* s : batch) {
    features.push_back(encode(state.encoder, s->image));
    present.push_back(s->labels);
  }
  return forward_features(features, analyze_batch(features, present, state.cam.base, cfg, seed), state.cam, cfg);
}

}  // namespace dscl
