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

#include "dscl/contrastive.h"

#include <algorithm>
#include <cmath>

#include "dscl/errors.h"
#include "dscl/ops.h"

namespace dscl {

void ContrastConfig::validate() const {
  if (!(tau > 0.0) || tau > 10.0) throw ConfigError("tau must lie in (0, 10]");
  if (!(theta > -1.0) || !(theta < 1.0)) throw ConfigError("theta must lie in (-1, 1)");
}

double contrast_score(std::span<const double> u, std::span<const double> v, double tau) {
  if (!(tau > 0.0)) throw ContractError("contrast_score: tau must be positive");
  return std::exp(cosine_similarity(u, v) / tau);
}

double contrast_score_literal(std::span<const double> u, std::span<const double> v, double tau) {
  if (!(tau > 0.0)) throw ContractError("contrast_score_literal: tau must be positive");
  std::vector<double> scaled(v.begin(), v.end());
  for (double& x : scaled) x /= tau;
  return std::exp(cosine_similarity(u, scaled));
}

namespace {

Var as_row(const Var& v) {
  if (v.value().rank() == 2 && v.dim(0) == 1) return v;
  return reshape(v, {1, v.value().size()});
}

void require_nonzero_rows(const Tensor& t, const char* what) {
  const std::size_t r = t.dim(0), c = t.dim(1);
  auto x = t.f64();
  for (std::size_t i = 0; i < r; ++i) {
    bool zero = true;
    for (std::size_t j = 0; j < c && zero; ++j) zero = x[i * c + j] == 0.0;
    if (zero) throw DegenerateVectorError(std::string(what) + ": zero vector");
  }
}

Var zero_loss() { return Var::constant(Tensor::scalar(0.0)); }

}  // namespace

Var nce_term(const Var& logits, std::size_t pos, const std::vector<std::size_t>& negs, bool include_positive) {
  if (negs.empty()) throw ContractError("info_nce: needs at least one negative");
  std::vector<std::size_t> denom;
  denom.reserve(negs.size() + 1);
  if (include_positive) denom.push_back(pos);
  denom.insert(denom.end(), negs.begin(), negs.end());
  return sub(logsumexp(gather(logits, denom)), element(logits, pos));
}

Var info_nce(const Var& anchor, const Var& positive, const Var& negatives, const ContrastConfig& cfg) {
  if (negatives.value().rank() != 2 || negatives.dim(0) == 0) {
    throw ContractError("info_nce: negatives must be a non-empty [n x D] matrix");
  }
  const Var a = as_row(anchor), p = as_row(positive);
  if (a.dim(1) != p.dim(1) || a.dim(1) != negatives.dim(1)) {
    throw ShapeError("info_nce: anchor, positive and negatives must share depth");
  }
  require_nonzero_rows(a.value(), "info_nce anchor");
  require_nonzero_rows(p.value(), "info_nce positive");
  require_nonzero_rows(negatives.value(), "info_nce negative");
  const Var candidates = normalize_rows(concat_rows({p, negatives}));
  const Var logits = scale(matmul_nt(normalize_rows(a), candidates), 1.0 / cfg.tau);
  std::vector<std::size_t> negs(negatives.dim(0));
  for (std::size_t i = 0; i < negs.size(); ++i) negs[i] = i + 1;
  return nce_term(logits, 0, negs, cfg.include_positive);
}

LossResult pgcl_loss(const std::vector<ImageGroups>& batch, const ContrastConfig& cfg) {
  std::vector<Var> parts;
  std::vector<int> cls;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const ImageGroups& img = batch[i];
    if (img.prototypes.value().rank() != 2 || img.prototypes.dim(0) != img.group_class.size()) {
      throw ShapeError("pgcl_loss: image " + std::to_string(i) + " has mismatched prototypes and classes");
    }
    parts.push_back(img.prototypes);
    cls.insert(cls.end(), img.group_class.begin(), img.group_class.end());
    owner.insert(owner.end(), img.group_class.size(), i);
  }
  LossResult out;
  if (parts.empty()) {
    out.loss = zero_loss();
    out.degenerate = true;
    return out;
  }
  const Var all = concat_rows(parts);
  require_nonzero_rows(all.value(), "pgcl_loss prototype");
  const std::size_t t = all.dim(0);
  const Var unit = normalize_rows(all);
  const Var logits = scale(matmul_nt(unit, unit), 1.0 / cfg.tau);  // [T x T]

  std::vector<std::vector<Var>> per_image(batch.size());
  for (std::size_t a = 0; a < t; ++a) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t b = 0; b < t; ++b) {
      if (b == a) continue;
      (cls[b] == cls[a] ? pos : neg).push_back(a * t + b);
    }
    if (pos.empty() || neg.empty()) continue;
    std::vector<Var> terms;
    for (std::size_t p : pos) terms.push_back(nce_term(logits, p, neg, cfg.include_positive));
    per_image[owner[a]].push_back(scale(add_n(terms), 1.0 / static_cast<double>(terms.size())));
    ++out.anchors;
  }
  std::vector<Var> image_terms;
  for (auto& anchors : per_image) {
    if (anchors.empty()) continue;
    image_terms.push_back(scale(add_n(anchors), 1.0 / static_cast<double>(anchors.size())));
  }
  if (image_terms.empty()) {
    out.loss = zero_loss();
    out.degenerate = true;
    return out;
  }
  out.loss = scale(add_n(image_terms), 1.0 / static_cast<double>(image_terms.size()));
  return out;
}

SemanticMatrix similarity_matrix_masked(const Var& prototypes, const Var& class_embeddings, std::vector<bool> keep,
                                        double tau) {
  if (prototypes.value().rank() != 2 || class_embeddings.value().rank() != 2 ||
      prototypes.dim(1) != class_embeddings.dim(1)) {
    throw ShapeError("similarity_matrix: prototypes " + shape_string(prototypes.shape()) +
                     " and class embeddings " + shape_string(class_embeddings.shape()) + " differ in depth");
  }
  if (keep.size() != class_embeddings.dim(0)) throw ShapeError("similarity_matrix: mask length differs from K");
  if (std::find(keep.begin(), keep.end(), true) == keep.end()) {
    throw ContractError("similarity_matrix: every class is masked");
  }
  if (!(tau > 0.0)) throw ContractError("similarity_matrix: tau must be positive");
  const Var cos = matmul_nt(normalize_rows(prototypes), normalize_rows(class_embeddings));
  Var m = softmax_rows_masked(scale(cos, 1.0 / tau), keep);
  return SemanticMatrix{std::move(m), std::move(keep)};
}

SemanticMatrix similarity_matrix(const Var& prototypes, const Var& class_embeddings,
                                 const std::vector<int>& present_classes, double tau) {
  const std::size_t k = class_embeddings.value().rank() == 2 ? class_embeddings.dim(0) : 0;
  if (k == 0) throw ShapeError("similarity_matrix: class embeddings must be [K x D]");
  std::vector<bool> keep(k, false);
  keep[0] = true;
  for (int c : present_classes) {
    if (c < 0 || static_cast<std::size_t>(c) >= k) throw ContractError("similarity_matrix: class out of range");
    keep[c] = true;
  }
  return similarity_matrix_masked(prototypes, class_embeddings, std::move(keep), tau);
}

std::size_t ClassPrototypeBank::present_count() const {
  return static_cast<std::size_t>(std::count(present.begin(), present.end(), true));
}

ClassPrototypeBank build_class_bank(const std::vector<Var>& features, const std::vector<PseudoLabelMap>& labels,
                                    std::size_t classes) {
  if (features.size() != labels.size() || features.empty()) {
    throw ContractError("build_class_bank: need one label map per feature map");
  }
  std::vector<int> ids;
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto l = labels[i].labels.u16();
    if (l.size() != features[i].dim(0)) throw ShapeError("build_class_bank: label map does not match features");
    for (std::uint16_t c : l) {
      if (c >= classes) throw ContractError("build_class_bank: label out of range");
      ids.push_back(c);
    }
  }
  ClassPrototypeBank bank;
  bank.present.assign(classes, false);
  for (int c : ids) bank.present[c] = true;
  const Var all = features.size() == 1 ? features[0] : concat_rows(features);
  bank.prototypes = segment_mean(all, ids, classes);
  return bank;
}

Var semantic_consistency(const SemanticMatrix& m, const ClassPrototypeBank& bank) {
  if (m.keep.size() != bank.present.size()) throw ShapeError("semantic_consistency: class counts differ");
  for (std::size_t k = 0; k < m.keep.size(); ++k) {
    if (m.keep[k] && !bank.present[k]) {
      throw ContractError("semantic_consistency: no prototype for class " + std::to_string(k));
    }
  }
  return matmul(m.m, bank.prototypes);
}

LossResult sgcl_loss(const Var& s, const std::vector<int>& group_class, const ClassPrototypeBank& bank,
                     const ContrastConfig& cfg) {
  LossResult out;
  if (s.value().rank() != 2 || s.dim(0) != group_class.size()) {
    throw ShapeError("sgcl_loss: semantic rows do not match group classes");
  }
  if (bank.present_count() < 2) {
    out.loss = zero_loss();
    out.degenerate = true;
    return out;
  }
  std::vector<std::size_t> banked;
  std::vector<int> slot(bank.present.size(), -1);
  for (std::size_t k = 0; k < bank.present.size(); ++k) {
    if (!bank.present[k]) continue;
    slot[k] = static_cast<int>(banked.size());
    banked.push_back(k);
  }
  const Var r = gather_rows(bank.prototypes, banked);
  require_nonzero_rows(r.value(), "sgcl_loss class prototype");
  require_nonzero_rows(s.value(), "sgcl_loss semantic row");
  const std::size_t kp = banked.size();
  const Var logits = scale(matmul_nt(normalize_rows(s), normalize_rows(r)), 1.0 / cfg.tau);  // [G x Kp]

  std::vector<Var> terms;
  for (std::size_t u = 0; u < group_class.size(); ++u) {
    const int k = group_class[u];
    if (k < 0 || static_cast<std::size_t>(k) >= slot.size() || slot[k] < 0) continue;
    std::vector<std::size_t> neg;
    for (std::size_t j = 0; j < kp; ++j)
      if (static_cast<int>(j) != slot[k]) neg.push_back(u * kp + j);
    terms.push_back(nce_term(logits, u * kp + slot[k], neg, cfg.include_positive));
  }
  out.anchors = terms.size();
  if (terms.empty()) {
    out.loss = zero_loss();
    out.degenerate = true;
    return out;
  }
  out.loss = scale(add_n(terms), 1.0 / static_cast<double>(terms.size()));
  return out;
}

}  // namespace dscl
