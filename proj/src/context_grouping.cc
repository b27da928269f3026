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

#include "dscl/context_grouping.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dscl/errors.h"
#include "dscl/ops.h"
#include "dscl/rng.h"

namespace dscl {

std::vector<std::size_t> GroupSet::sizes() const {
  std::vector<std::size_t> out(groups, 0);
  for (int a : assignment) ++out[a];
  return out;
}

AffinityMatrix pixel_affinity(const Tensor& f) {
  if (f.rank() != 2) throw ShapeError("pixel_affinity: features must be [V x D]");
  const std::size_t v = f.dim(0), d = f.dim(1);
  if (d < 2) throw ContractError("pixel_affinity: needs D >= 2");
  if (v > kMaxAffinityPixels) {
    throw ConfigError("pixel_affinity: " + std::to_string(v) + " pixels exceeds the cap of " +
                      std::to_string(kMaxAffinityPixels));
  }
  auto x = f.f64();
  // Centre and scale each row so that a dot product is a correlation.
  std::vector<double> z(v * d);
  std::vector<bool> degenerate(v, false);
  for (std::size_t u = 0; u < v; ++u) {
    const double* row = x.data() + u * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double ss = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      z[u * d + j] = row[j] - mu;
      ss += z[u * d + j] * z[u * d + j];
    }
    if (ss == 0.0) {
      degenerate[u] = true;
      continue;
    }
    const double inv = 1.0 / std::sqrt(ss);
    for (std::size_t j = 0; j < d; ++j) z[u * d + j] *= inv;
  }
  std::vector<double> a(v * v, 0.0);
  for (std::size_t u = 0; u < v; ++u) {
    a[u * v + u] = 1.0;
    if (degenerate[u]) continue;
    for (std::size_t w = u + 1; w < v; ++w) {
      if (degenerate[w]) continue;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += z[u * d + j] * z[w * d + j];
      s = std::clamp(s, -1.0, 1.0);
      a[u * v + w] = s;
      a[w * v + u] = s;
    }
  }
  return AffinityMatrix{Tensor({v, v}, std::move(a))};
}

Tensor affinity_weights(const AffinityMatrix& a) {
  return softmax_rows(Var::constant(a.a)).value();
}

Var pixel_context_weighted(const Var& f, const Tensor& weights) {
  if (weights.rank() != 2 || weights.dim(0) != f.dim(0) || weights.dim(1) != f.dim(0)) {
    throw ShapeError("pixel_context: affinity " + shape_string(weights.shape()) + " does not match features " +
                     shape_string(f.shape()));
  }
  return matmul(Var::constant(weights), f);
}

Var pixel_context(const Var& f, const AffinityMatrix& a) { return pixel_context_weighted(f, affinity_weights(a)); }

std::vector<std::size_t> positive_set(const AffinityMatrix& a, std::size_t u, double theta) {
  const std::size_t v = a.pixels();
  if (u >= v) throw ContractError("positive_set: pixel index out of range");
  auto row = a.a.f64().subspan(u * v, v);
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < v; ++w) {
    if (w == u || row[w] >= theta) out.push_back(w);
  }
  return out;
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

}  // namespace

GroupSet cluster_pixels(const Tensor& f, const Tensor& ctx, std::size_t groups, std::uint64_t seed) {
  if (f.rank() != 2 || ctx.shape() != f.shape()) {
    throw ShapeError("cluster_pixels: features " + shape_string(f.shape()) + " and context " +
                     shape_string(ctx.shape()) + " must both be [V x D]");
  }
  const std::size_t v = f.dim(0), d = f.dim(1), dd = 2 * d;
  if (groups < 1) throw ConfigError("cluster_pixels: need at least one group");
  if (groups > v) {
    throw ConfigError("cluster_pixels: " + std::to_string(groups) + " groups for " + std::to_string(v) + " pixels");
  }

  std::vector<double> x(v * dd);
  {
    auto fv = f.f64(), cv = ctx.f64();
    for (std::size_t u = 0; u < v; ++u) {
      std::copy_n(fv.data() + u * d, d, x.data() + u * dd);
      std::copy_n(cv.data() + u * d, d, x.data() + u * dd + d);
    }
  }

  // k-means++ seeding.
  Rng rng(derive_seed(seed, 0xc105e5));
  std::vector<double> centers(groups * dd);
  std::vector<double> dist(v, std::numeric_limits<double>::infinity());
  std::size_t first = rng.below(v);
  std::copy_n(x.data() + first * dd, dd, centers.data());
  for (std::size_t c = 1; c < groups; ++c) {
    double total = 0.0;
    for (std::size_t u = 0; u < v; ++u) {
      dist[u] = std::min(dist[u], sq_dist(x.data() + u * dd, centers.data() + (c - 1) * dd, dd));
      total += dist[u];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = v - 1;
      for (std::size_t u = 0; u < v; ++u) {
        acc += dist[u];
        if (acc > target && dist[u] > 0.0) {
          pick = u;
          break;
        }
      }
    } else {
      pick = rng.below(v);
    }
    std::copy_n(x.data() + pick * dd, dd, centers.data() + c * dd);
  }

  GroupSet out;
  out.groups = groups;
  out.assignment.assign(v, 0);
  std::vector<double> counts(groups);
  std::vector<double> next(groups * dd);

  auto assign = [&]() {
    for (std::size_t u = 0; u < v; ++u) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t c = 0; c < groups; ++c) {
        const double dc = sq_dist(x.data() + u * dd, centers.data() + c * dd, dd);
        if (dc < best) {
          best = dc;
          arg = static_cast<int>(c);
        }
      }
      out.assignment[u] = arg;
    }
  };
  auto update = [&]() {
    std::fill(counts.begin(), counts.end(), 0.0);
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t u = 0; u < v; ++u) {
      const int c = out.assignment[u];
      counts[c] += 1.0;
      for (std::size_t j = 0; j < dd; ++j) next[c * dd + j] += x[u * dd + j];
    }
    for (std::size_t c = 0; c < groups; ++c)
      for (std::size_t j = 0; j < dd; ++j) next[c * dd + j] /= counts[c];
  };
  auto repair = [&]() {
    for (;;) {
      std::vector<std::size_t> size(groups, 0);
      for (int a : out.assignment) ++size[a];
      const auto empty = std::find(size.begin(), size.end(), 0);
      if (empty == size.end()) return;
      const std::size_t largest = std::max_element(size.begin(), size.end()) - size.begin();
      // Centroid of the largest cluster as it currently stands.
      std::vector<double> mean(dd, 0.0);
      for (std::size_t u = 0; u < v; ++u) {
        if (out.assignment[u] != static_cast<int>(largest)) continue;
        for (std::size_t j = 0; j < dd; ++j) mean[j] += x[u * dd + j];
      }
      for (double& m : mean) m /= static_cast<double>(size[largest]);
      std::size_t far = v;
      double far_d = -1.0;
      for (std::size_t u = 0; u < v; ++u) {
        if (out.assignment[u] != static_cast<int>(largest)) continue;
        const double du = sq_dist(x.data() + u * dd, mean.data(), dd);
        if (du > far_d) {
          far_d = du;
          far = u;
        }
      }
      out.assignment[far] = static_cast<int>(empty - size.begin());
    }
  };
  auto objective = [&]() {
    double s = 0.0;
    for (std::size_t u = 0; u < v; ++u) s += sq_dist(x.data() + u * dd, centers.data() + out.assignment[u] * dd, dd);
    return s;
  };

  for (int iter = 0; iter < 100; ++iter) {
    assign();
    repair();
    update();
    double shift = 0.0;
    for (std::size_t c = 0; c < groups; ++c) shift = std::max(shift, std::sqrt(sq_dist(next.data() + c * dd, centers.data() + c * dd, dd)));
    centers = next;
    out.objective_trace.push_back(objective());
    if (shift < 1e-4) break;
  }

  std::vector<double> proto(groups * d, 0.0);
  std::vector<double> n(groups, 0.0);
  auto fv = f.f64();
  for (std::size_t u = 0; u < v; ++u) {
    const int c = out.assignment[u];
    n[c] += 1.0;
    for (std::size_t j = 0; j < d; ++j) proto[c * d + j] += fv[u * d + j];
  }
  for (std::size_t c = 0; c < groups; ++c)
    for (std::size_t j = 0; j < d; ++j) proto[c * d + j] /= n[c];
  out.prototypes = Tensor({groups, d}, std::move(proto));
  return out;
}

Var group_context(const Var& ctx, const GroupSet& g) { return segment_mean(ctx, g.assignment, g.groups); }

Var group_prototypes(const Var& f, const GroupSet& g) { return segment_mean(f, g.assignment, g.groups); }

std::vector<int> assign_group_classes(const GroupSet& g, const PseudoLabelMap& y,
                                      const std::vector<int>& present_classes) {
  auto labels = y.labels.u16();
  if (labels.size() != g.assignment.size()) {
    throw ShapeError("assign_group_classes: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(g.assignment.size()) + " pixels");
  }
  int max_class = 0;
  for (int c : present_classes) max_class = std::max(max_class, c);
  for (std::uint16_t l : labels) max_class = std::max(max_class, static_cast<int>(l));
  std::vector<bool> allowed(max_class + 1, false);
  allowed[0] = true;
  for (int c : present_classes) allowed[c] = true;

  std::vector<std::vector<std::size_t>> votes(g.groups, std::vector<std::size_t>(max_class + 1, 0));
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (allowed[labels[p]]) ++votes[g.assignment[p]][labels[p]];
  }
  std::vector<int> out(g.groups, 0);
  for (std::size_t u = 0; u < g.groups; ++u) {
    std::size_t best = 0;
    for (int c = 0; c <= max_class; ++c) {
      if (votes[u][c] > best) {
        best = votes[u][c];
        out[u] = c;
      }
    }
  }
  return out;
}

ContextBundle build_context_bundle(const Tensor& f, const AffinityMatrix& a, const GroupSet& g, double theta) {
  ContextBundle b;
  b.theta = theta;
  const Var ctx = pixel_context(Var::constant(f), a);
  b.per_pixel = ctx.value();
  b.per_group = group_context(ctx, g).value();
  for (std::size_t u = 0; u < a.pixels(); ++u) b.positive_sets.push_back(positive_set(a, u, theta));
  return b;
}

}  // namespace dscl
