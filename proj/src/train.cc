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

#include "dscl/train.h"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dscl/errors.h"
#include "dscl/eval.h"
#include "dscl/rng.h"
#include "dscl/run_config.h"

namespace dscl {

std::vector<std::size_t> batch_indices(std::uint64_t seed, std::size_t step, std::size_t batch, std::size_t count) {
  if (count == 0) throw ContractError("batch_indices: empty dataset");
  std::vector<std::size_t> out;
  std::size_t cached_epoch = SIZE_MAX;
  std::vector<std::size_t> perm(count);
  for (std::size_t j = 0; j < batch; ++j) {
    const std::size_t pos = step * batch + j;
    const std::size_t epoch = pos / count;
    if (epoch != cached_epoch) {
      std::iota(perm.begin(), perm.end(), 0);
      Rng rng(derive_seed(seed, 0xba7c4, epoch));
      for (std::size_t i = count - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
      cached_epoch = epoch;
    }
    out.push_back(perm[pos % count]);
  }
  return out;
}

void sgd_step(ModelState& state, const GradMap& grads, double lr, double clip) {
  auto params = state.parameters();
  double gscale = 1.0;
  if (clip > 0.0) {
    double sq = 0.0;
    // Parameter order, not map order, so the sum is reproducible.
    for (const NamedParam& q : params) {
      const auto it = grads.find(q.var.node());
      if (it == grads.end()) continue;
      for (double x : it->second.f64()) sq += x * x;
    }
    if (std::sqrt(sq) > clip) gscale = clip / std::sqrt(sq);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto v = state.momentum[i].f64();
    auto p = params[i].var.mutable_value().f64();
    const auto it = grads.find(params[i].var.node());
    if (it == grads.end()) {
      for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = kMomentum * v[j];
        p[j] -= lr * v[j];
      }
      continue;
    }
    auto g = it->second.f64();
    for (std::size_t j = 0; j < v.size(); ++j) {
      v[j] = kMomentum * v[j] + gscale * g[j];
      p[j] -= lr * v[j];
    }
  }
}

namespace {

void check_finite(std::size_t step, const char* term, double v) {
  if (!std::isfinite(v)) {
    throw NumericalError("step " + std::to_string(step) + ": non-finite " + term + " (" + format_double(v) + ")");
  }
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<Scene>& scenes, int classes, const ModelState* resume) {
  cfg.validate_ranges();
  if (scenes.empty()) throw ContractError("train: no scenes");
  TrainResult out;
  out.state = resume ? clone_model(*resume) : init_model(cfg, classes);
  ModelState& state = out.state;
  if (resume && state.encoder.depth() != cfg.depth) throw ConfigError("train: checkpoint depth differs from config");

  while (state.step < cfg.steps) {
    const std::size_t step = state.step + 1;
    const auto idx = batch_indices(cfg.seed, state.step, cfg.batch, scenes.size());
    std::vector<const Scene*> batch;
    for (std::size_t i : idx) batch.push_back(&scenes[i]);
    const BatchOutput o = forward_batch(state, batch, cfg, derive_seed(cfg.seed, 0x57e9, step));

    MetricsRow row;
    row.step = step;
    row.loss_total = o.losses.total.item();
    row.loss_ce = o.losses.ce.item();
    row.loss_pgcl = o.losses.pgcl.item();
    row.loss_sgcl = o.losses.sgcl.item();
    check_finite(step, "loss_ce", row.loss_ce);
    check_finite(step, "loss_pgcl", row.loss_pgcl);
    check_finite(step, "loss_sgcl", row.loss_sgcl);
    check_finite(step, "loss_total", row.loss_total);

    const GradMap grads = backward(o.losses.total);
    sgd_step(state, grads, cfg.lr, cfg.clip);
    state.step = step;

    const bool snapshot = step == cfg.steps || (cfg.eval_every > 0 && step % cfg.eval_every == 0);
    if (snapshot) {
      const EvalResult e = evaluate(state, scenes, classes, cfg);
      row.miou_base = e.base.miou;
      row.miou_refined = e.refined.miou;
    }
    out.metrics.push_back(row);
  }
  return out;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "step,loss_total,loss_ce,loss_pgcl,loss_sgcl,miou_base,miou_refined\n";
  for (const MetricsRow& r : rows) {
    out << r.step << ',' << format_double(r.loss_total) << ',' << format_double(r.loss_ce) << ','
        << format_double(r.loss_pgcl) << ',' << format_double(r.loss_sgcl) << ','
        << (r.miou_base ? format_double(*r.miou_base) : "") << ','
        << (r.miou_refined ? format_double(*r.miou_refined) : "") << '\n';
  }
  return out.str();
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << metrics_csv(rows);
}

}  // namespace dscl
