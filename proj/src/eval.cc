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

#include "dscl/eval.h"

#include "dscl/errors.h"
#include "dscl/rng.h"

namespace dscl {

IoUAccumulator::IoUAccumulator(std::size_t classes) : classes_(classes), inter_(classes, 0), uni_(classes, 0) {}

void IoUAccumulator::add(const Tensor& pred, const Tensor& gt) {
  if (pred.shape() != gt.shape()) {
    throw ShapeError("miou: prediction " + shape_string(pred.shape()) + " vs ground truth " + shape_string(gt.shape()));
  }
  auto p = pred.u16();
  auto g = gt.u16();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] >= classes_ || g[i] >= classes_) throw ContractError("miou: class id out of range");
    if (p[i] == g[i]) {
      ++inter_[p[i]];
      ++uni_[p[i]];
    } else {
      ++uni_[p[i]];
      ++uni_[g[i]];
    }
  }
}

IoUReport IoUAccumulator::report() const {
  IoUReport r;
  r.per_class.resize(classes_);
  double total = 0.0;
  for (std::size_t k = 0; k < classes_; ++k) {
    if (uni_[k] == 0) continue;
    const double iou = static_cast<double>(inter_[k]) / static_cast<double>(uni_[k]);
    r.per_class[k] = iou;
    r.defined_classes.push_back(static_cast<int>(k));
    total += iou;
  }
  if (!r.defined_classes.empty()) r.miou = total / static_cast<double>(r.defined_classes.size());
  return r;
}

IoUReport miou(const PseudoLabelMap& pred, const Tensor& gt, std::size_t classes) {
  IoUAccumulator acc(classes);
  acc.add(pred.labels, gt);
  return acc.report();
}

Tensor upsample_labels(const Tensor& labels, std::size_t height, std::size_t width) {
  if (labels.rank() != 2) throw ShapeError("upsample_labels: expects an [H x W] map");
  const std::size_t h = labels.dim(0), w = labels.dim(1);
  auto src = labels.u16();
  std::vector<std::uint16_t> out(height * width);
  for (std::size_t r = 0; r < height; ++r) {
    const std::size_t sr = r * h / height;
    for (std::size_t c = 0; c < width; ++c) out[r * width + c] = src[sr * w + c * w / width];
  }
  return Tensor({height, width}, std::move(out));
}

EvalResult evaluate(const ModelState& state, const std::vector<Scene>& scenes, int classes, const TrainConfig& cfg) {
  const std::size_t k = static_cast<std::size_t>(classes);
  IoUAccumulator base(k), refined(k);
  EvalResult out;
  const std::size_t step = std::max<std::size_t>(cfg.batch, 1);
  for (std::size_t start = 0; start < scenes.size(); start += step) {
    std::vector<const Scene*> batch;
    for (std::size_t i = start; i < std::min(scenes.size(), start + step); ++i) batch.push_back(&scenes[i]);
    const BatchOutput o = forward_batch(state, batch, cfg, derive_seed(cfg.seed, 0xe7a1, start));
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Tensor& gt = batch[i]->gt_mask;
      base.add(upsample_labels(o.base_labels[i].labels, gt.dim(0), gt.dim(1)), gt);
      refined.add(upsample_labels(o.refined_labels[i].labels, gt.dim(0), gt.dim(1)), gt);
      out.base_labels.push_back(o.base_labels[i]);
      out.refined_labels.push_back(o.refined_labels[i]);
    }
  }
  out.base = base.report();
  out.refined = refined.report();
  return out;
}

}  // namespace dscl
