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

#include "dscl/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "dscl/ablation.h"
#include "dscl/context_grouping.h"
#include "dscl/contrastive.h"
#include "dscl/errors.h"
#include "dscl/ops.h"
#include "dscl/rng.h"
#include "dscl/run_config.h"

namespace dscl {

const char* variant_name(BenchVariant v) { return v == BenchVariant::kPixelwise ? "pixelwise" : "grouped"; }

std::string BenchSize::label() const { return std::to_string(width) + "x" + std::to_string(height); }

BenchSize parse_bench_size(const std::string& text) {
  auto number = [&](const std::string& s) -> std::size_t {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw ConfigError("bad size '" + text + "' (expected WxH or N)");
    }
    const std::size_t v = std::stoull(s);
    if (v == 0) throw ConfigError("bad size '" + text + "': zero extent");
    return v;
  };
  const auto x = text.find('x');
  if (x == std::string::npos) {
    const std::size_t n = number(text);
    return {n, n};
  }
  return {number(text.substr(0, x)), number(text.substr(x + 1))};
}

std::uint64_t pixel_pair_count(std::size_t pixels, std::size_t images) {
  const std::uint64_t v = pixels;
  return images * (v * (v - (v > 0 ? 1 : 0)) / 2);
}

std::uint64_t group_pair_count(std::size_t groups, std::size_t images) {
  const std::uint64_t t = static_cast<std::uint64_t>(groups) * images;
  return t > 0 ? t * (t - 1) / 2 : 0;
}

namespace {

float dot(const float* a, const float* b, std::size_t d) {
  float s = 0.0f;
  for (std::size_t j = 0; j < d; ++j) s += a[j] * b[j];
  return s;
}

// Rows scaled to unit norm; zero rows stay zero.
std::vector<float> unit_rows(const std::vector<float>& f, std::size_t d, std::vector<float>* norms) {
  const std::size_t v = f.size() / d;
  std::vector<float> z(f.size());
  if (norms) norms->assign(v, 0.0f);
  for (std::size_t u = 0; u < v; ++u) {
    const float n = std::sqrt(dot(&f[u * d], &f[u * d], d));
    if (norms) (*norms)[u] = n;
    const float inv = n > 0.0f ? 1.0f / n : 0.0f;
    for (std::size_t j = 0; j < d; ++j) z[u * d + j] = f[u * d + j] * inv;
  }
  return z;
}

// Rows centred, then scaled to unit norm: dot products are correlations.
std::vector<float> pearson_rows(const std::vector<float>& f, std::size_t d) {
  const std::size_t v = f.size() / d;
  std::vector<float> c(f.size());
  for (std::size_t u = 0; u < v; ++u) {
    float mu = 0.0f;
    for (std::size_t j = 0; j < d; ++j) mu += f[u * d + j];
    mu /= static_cast<float>(d);
    for (std::size_t j = 0; j < d; ++j) c[u * d + j] = f[u * d + j] - mu;
  }
  return unit_rows(c, d, nullptr);
}

double pixelwise_image(const std::vector<float>& f, std::size_t d, const BenchConfig& cfg, std::vector<float>& df) {
  const std::size_t v = f.size() / d;
  std::vector<float> norms;
  const std::vector<float> z = unit_rows(f, d, &norms);
  const std::vector<float> zc = pearson_rows(f, d);
  const float inv_tau = static_cast<float>(1.0 / cfg.tau);
  const float theta = static_cast<float>(cfg.theta);

  std::vector<float> dz(v * d, 0.0f);
  std::vector<float> s(v), g(v);
  std::vector<char> pos(v);
  double loss = 0.0;
  std::size_t anchors = 0;
  for (std::size_t u = 0; u < v; ++u) {
    std::size_t npos = 0, nneg = 0;
    float smax = -INFINITY;
    for (std::size_t w = 0; w < v; ++w) {
      pos[w] = w == u || dot(&zc[u * d], &zc[w * d], d) >= theta;
      s[w] = dot(&z[u * d], &z[w * d], d) * inv_tau;
      if (w == u) continue;
      if (pos[w]) {
        ++npos;
      } else {
        ++nneg;
        smax = std::max(smax, s[w]);
      }
    }
    if (npos == 0 || nneg == 0) continue;
    ++anchors;
    float zsum = 0.0f;
    for (std::size_t w = 0; w < v; ++w)
      if (!pos[w]) zsum += std::exp(s[w] - smax);
    const float lse = smax + std::log(zsum);
    // term_p = softplus(lse - s_p); d/ds_p = -sigma, d/ds_n = sigma * softmax_n.
    float sig_total = 0.0f;
    for (std::size_t w = 0; w < v; ++w) {
      g[w] = 0.0f;
      if (w == u || !pos[w]) continue;
      const float t = lse - s[w];
      loss += t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
      const float sig = 1.0f / (1.0f + std::exp(-t));
      g[w] = -sig;
      sig_total += sig;
    }
    for (std::size_t w = 0; w < v; ++w)
      if (!pos[w]) g[w] = sig_total * std::exp(s[w] - smax) / zsum;
    const float scale = inv_tau / static_cast<float>(npos);
    for (std::size_t w = 0; w < v; ++w) {
      const float gw = g[w] * scale;
      if (gw == 0.0f) continue;
      for (std::size_t j = 0; j < d; ++j) {
        dz[u * d + j] += gw * z[w * d + j];
        dz[w * d + j] += gw * z[u * d + j];
      }
    }
  }
  // Through the row normalisation.
  df.assign(v * d, 0.0f);
  for (std::size_t u = 0; u < v; ++u) {
    if (norms[u] == 0.0f) continue;
    const float proj = dot(&z[u * d], &dz[u * d], d);
    for (std::size_t j = 0; j < d; ++j) df[u * d + j] = (dz[u * d + j] - z[u * d + j] * proj) / norms[u];
  }
  return anchors ? loss : 0.0;
}

}  // namespace

double pixelwise_iteration(const std::vector<std::vector<float>>& features, std::size_t depth, const BenchConfig& cfg,
                           std::vector<std::vector<float>>* grads) {
  double loss = 0.0;
  std::vector<float> df;
  for (std::size_t i = 0; i < features.size(); ++i) {
    loss += pixelwise_image(features[i], depth, cfg, df);
    if (grads) (*grads)[i] = df;
  }
  return loss;
}

double grouped_iteration(const std::vector<std::vector<float>>& features, std::size_t depth, std::size_t groups,
                         const BenchConfig& cfg, std::vector<std::vector<float>>* grads) {
  const std::size_t d = depth;
  std::vector<ImageGroups> batch;
  std::vector<Var> leaves;
  std::vector<GroupSet> sets;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::vector<float>& f = features[i];
    const std::size_t v = f.size() / d;
    // Affinity row, softmax weights and context vector, one row at a time.
    const std::vector<float> zc = pearson_rows(f, d);
    std::vector<double> ctx(v * d, 0.0);
    std::vector<float> a(v);
    for (std::size_t u = 0; u < v; ++u) {
      float amax = -INFINITY;
      for (std::size_t w = 0; w < v; ++w) {
        a[w] = dot(&zc[u * d], &zc[w * d], d);
        amax = std::max(amax, a[w]);
      }
      float total = 0.0f;
      for (std::size_t w = 0; w < v; ++w) total += (a[w] = std::exp(a[w] - amax));
      std::vector<float> acc(d, 0.0f);
      for (std::size_t w = 0; w < v; ++w) {
        const float wt = a[w];
        for (std::size_t j = 0; j < d; ++j) acc[j] += wt * f[w * d + j];
      }
      for (std::size_t j = 0; j < d; ++j) ctx[u * d + j] = acc[j] / total;
    }
    const Tensor fv({v, d}, std::vector<double>(f.begin(), f.end()));
    GroupSet g = cluster_pixels(fv, Tensor({v, d}, std::move(ctx)), groups, derive_seed(cfg.seed, 0xbe7c, i));
    // Group classes come from the cluster index: cluster u of every image
    // plays the same role, so each anchor has cross-image positives.
    g.group_class.resize(groups);
    for (std::size_t u = 0; u < groups; ++u) g.group_class[u] = static_cast<int>(u);
    const Var leaf = Var::parameter(fv);
    batch.push_back({group_prototypes(leaf, g), g.group_class});
    leaves.push_back(leaf);
    sets.push_back(std::move(g));
  }
  const LossResult r = pgcl_loss(batch, ContrastConfig{cfg.tau, cfg.theta, true});
  const GradMap gm = backward(r.loss);
  if (grads) {
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      auto it = gm.find(leaves[i].node());
      auto gv = it->second.f64();
      (*grads)[i].assign(gv.begin(), gv.end());
    }
  }
  return r.loss.item();
}

std::vector<BenchRecord> bench_contrast(const std::vector<BenchSize>& sizes, const std::vector<std::size_t>& groups,
                                        std::size_t repeats, const BenchConfig& cfg) {
  if (repeats < 3) throw ConfigError("bench: repeats must be >= 3");
  if (cfg.images < 1 || cfg.depth < 2) throw ConfigError("bench: needs images >= 1 and depth >= 2");
  using clock = std::chrono::steady_clock;
  std::vector<BenchRecord> out;
  volatile double sink = 0.0;
  for (const BenchSize& size : sizes) {
    const std::size_t v = size.pixels();
    if (v > kMaxAffinityPixels) {
      throw ConfigError("bench: " + size.label() + " exceeds the " + std::to_string(kMaxAffinityPixels) +
                        "-pixel affinity cap");
    }
    Rng rng(derive_seed(cfg.seed, 0xbe7c, v));
    std::vector<std::vector<float>> feats(cfg.images, std::vector<float>(v * cfg.depth));
    for (auto& f : feats)
      for (float& x : f) x = static_cast<float>(rng.normal());
    std::vector<std::vector<float>> grads(cfg.images);

    auto time_it = [&](auto&& fn) {
      std::vector<double> t;
      for (std::size_t r = 0; r < repeats; ++r) {
        const auto t0 = clock::now();
        sink = sink + fn();
        t.push_back(std::chrono::duration<double>(clock::now() - t0).count());
      }
      return median(t);
    };
    BenchRecord px{size, 0, BenchVariant::kPixelwise, 0.0, pixel_pair_count(v, cfg.images)};
    px.median_seconds = time_it([&] { return pixelwise_iteration(feats, cfg.depth, cfg, &grads); });
    out.push_back(px);
    for (std::size_t g : groups) {
      if (g < 1 || g > v) throw ConfigError("bench: group count " + std::to_string(g) + " out of range");
      BenchRecord gr{size, g, BenchVariant::kGrouped, 0.0, group_pair_count(g, cfg.images)};
      gr.median_seconds = time_it([&] { return grouped_iteration(feats, cfg.depth, g, cfg, &grads); });
      out.push_back(gr);
    }
  }
  return out;
}

std::string bench_csv(const std::vector<BenchRecord>& records) {
  std::ostringstream out;
  out << "resolution,G,variant,median_seconds,pairs\n";
  for (const BenchRecord& r : records) {
    out << r.size.label() << ',' << r.groups << ',' << variant_name(r.variant) << ','
        << format_double(r.median_seconds) << ',' << r.pairs << '\n';
  }
  return out.str();
}

}  // namespace dscl
