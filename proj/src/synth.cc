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

#include "dscl/synth.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

#include "dscl/errors.h"
#include "dscl/rng.h"

namespace dscl {

void SynthConfig::validate() const {
  if (width < 16 || width > 128 || height < 16 || height > 128) {
    throw ConfigError("scene width/height must lie in [16, 128]");
  }
  if (classes < 3 || classes > 8) throw ConfigError("classes must lie in [3, 8]");
  if (min_blobs < 1 || max_blobs > classes - 1 || min_blobs > max_blobs) {
    throw ConfigError("blobs per image must satisfy 1 <= min <= max <= classes - 1");
  }
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");
  if (!(min_radius > 0.0) || max_radius < min_radius || max_radius > 0.5) {
    throw ConfigError("blob radius fractions must satisfy 0 < min <= max <= 0.5");
  }
  if (max_retries < 1) throw ConfigError("max_retries must be positive");
}

namespace {

using Rgb = std::array<double, 3>;

Rgb hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h * 6.0, 6.0);
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  Rgb rgb{};
  switch (static_cast<int>(hp)) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  const double m = v - c;
  return {rgb[0] + m, rgb[1] + m, rgb[2] + m};
}

Rgb class_color(int k, int classes) {
  const double hue = static_cast<double>(k - 1) / static_cast<double>(classes - 1);
  return hsv_to_rgb(hue, 0.75, 0.85);
}

// Shape family per class; (dy, dx) are offsets from the centre, r the radius.
bool inside_shape(int k, double dy, double dx, double r) {
  const double ady = std::abs(dy), adx = std::abs(dx);
  switch ((k - 1) % 6) {
    case 0:  // disc
      return dy * dy + dx * dx <= r * r;
    case 1:  // square
      return ady <= 0.85 * r && adx <= 0.85 * r;
    case 2:  // diamond
      return ady + adx <= 1.15 * r;
    case 3:  // upward triangle
      return dy >= -r && dy <= 0.8 * r && adx <= 0.6 * (dy + r);
    case 4:  // plus
      return (ady <= 0.35 * r && adx <= r) || (adx <= 0.35 * r && ady <= r);
    default:  // horizontal ellipse
      return (dy * dy) / (0.36 * r * r) + (dx * dx) / (r * r) <= 1.0;
  }
}

constexpr int kLayouts = 4;

}  // namespace

Scene generate_scene(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, 0x5ce9e));
  const std::size_t h = cfg.height, w = cfg.width;

  // Background: low-contrast oriented stripes plus a warm/cool tint.
  std::vector<double> image(h * w * 3);
  const double angle = rng.uniform(0.0, std::numbers::pi);
  const double freq = rng.uniform(0.25, 0.6);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double base = rng.uniform(0.35, 0.5);
  const Rgb tint{rng.uniform(-0.04, 0.04), rng.uniform(-0.04, 0.04), rng.uniform(-0.04, 0.04)};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double t = std::cos(angle) * static_cast<double>(x) + std::sin(angle) * static_cast<double>(y);
      const double stripe = 0.08 * std::sin(freq * t + phase);
      for (int c = 0; c < 3; ++c) image[(y * w + x) * 3 + c] = base + stripe + tint[c];
    }
  }

  // Which classes appear.
  const int n_blobs = cfg.min_blobs + static_cast<int>(rng.below(cfg.max_blobs - cfg.min_blobs + 1));
  std::vector<int> pool;
  for (int k = 1; k < cfg.classes; ++k) pool.push_back(k);
  for (int i = 0; i < n_blobs; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> chosen(pool.begin(), pool.begin() + n_blobs);

  // A layout that cannot fit every blob is redrawn with smaller blobs; the
  // first layout is kept whenever it fits.
  const std::vector<double> background = image;
  std::vector<std::uint16_t> mask;
  const double side = static_cast<double>(std::min(h, w));
  double crowding = std::min(1.0, std::sqrt(3.0 / n_blobs));
  for (int layout = 0;; ++layout, crowding *= 0.8) {
    image = background;
    mask.assign(h * w, 0);
    int failed = -1;
    for (int k : chosen) {
      bool placed = false;
      for (int attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
        const double r = rng.uniform(cfg.min_radius, cfg.max_radius) * side * crowding;
        const double cy = rng.uniform(r, static_cast<double>(h) - r);
        const double cx = rng.uniform(r, static_cast<double>(w) - r);
        std::vector<std::size_t> pixels;
        bool clash = false;
        for (std::size_t y = 0; y < h && !clash; ++y) {
          for (std::size_t x = 0; x < w; ++x) {
            const double dy = static_cast<double>(y) + 0.5 - cy, dx = static_cast<double>(x) + 0.5 - cx;
            if (!inside_shape(k, dy, dx, r)) continue;
            // One-pixel gap to every other blob.
            for (int oy = -1; oy <= 1 && !clash; ++oy) {
              for (int ox = -1; ox <= 1; ++ox) {
                const long yy = static_cast<long>(y) + oy, xx = static_cast<long>(x) + ox;
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) continue;
                if (mask[yy * w + xx] != 0) {
                  clash = true;
                  break;
                }
              }
            }
            pixels.push_back(y * w + x);
          }
        }
        if (clash || pixels.size() < 4) continue;
        Rgb color = class_color(k, cfg.classes);
        for (double& c : color) c += rng.uniform(-0.08, 0.08);
        for (std::size_t p : pixels) {
          mask[p] = static_cast<std::uint16_t>(k);
          for (int c = 0; c < 3; ++c) image[p * 3 + c] = color[c];
        }
        placed = true;
      }
      if (!placed) {
        failed = k;
        break;
      }
    }
    if (failed < 0) break;
    if (layout + 1 >= kLayouts) {
      throw GenerationError("could not place blob for class " + std::to_string(failed) + " after " +
                            std::to_string(kLayouts) + " layouts of " + std::to_string(cfg.max_retries) +
                            " attempts");
    }
  }

  for (double& v : image) v = std::clamp(v + cfg.noise_sigma * rng.normal(), 0.0, 1.0);

  std::sort(chosen.begin(), chosen.end());
  return Scene{Tensor({h, w, 3}, std::move(image)), Tensor({h, w}, std::move(mask)), std::move(chosen)};
}

std::vector<int> mask_classes(const Tensor& mask) {
  std::set<int> ids;
  for (std::uint16_t v : mask.u16())
    if (v != kBackground) ids.insert(v);
  return {ids.begin(), ids.end()};
}

std::vector<Scene> generate_scenes(const SynthConfig& cfg, std::uint64_t seed, std::size_t count) {
  std::vector<Scene> scenes;
  scenes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) scenes.push_back(generate_scene(cfg, derive_seed(seed, 0xda7a, i)));
  return scenes;
}

}  // namespace dscl
