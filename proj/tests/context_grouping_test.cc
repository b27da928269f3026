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

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "dscl/context_grouping.h"
#include "dscl/errors.h"
#include "dscl/ops.h"
#include "dscl/rng.h"
#include "oracles.h"

namespace dscl {
namespace {

double sse(const oracle::Mat& x, const std::vector<int>& assign, std::size_t groups) {
  const std::size_t d = x[0].size();
  oracle::Mat mean(groups, oracle::Vec(d, 0.0));
  std::vector<double> n(groups, 0.0);
  for (std::size_t u = 0; u < x.size(); ++u) {
    n[assign[u]] += 1;
    for (std::size_t j = 0; j < d; ++j) mean[assign[u]][j] += x[u][j];
  }
  for (std::size_t g = 0; g < groups; ++g)
    for (double& m : mean[g]) m = n[g] ? m / n[g] : 0.0;
  double s = 0.0;
  for (std::size_t u = 0; u < x.size(); ++u)
    for (std::size_t j = 0; j < d; ++j) s += std::pow(x[u][j] - mean[assign[u]][j], 2);
  return s;
}

oracle::Mat augmented(const oracle::Mat& f, const oracle::Mat& c) {
  oracle::Mat x = f;
  for (std::size_t u = 0; u < f.size(); ++u) x[u].insert(x[u].end(), c[u].begin(), c[u].end());
  return x;
}

TEST(AffinityTest, IdenticalPixelsGiveOnes) {
  const AffinityMatrix a = pixel_affinity(oracle::to_tensor(oracle::Mat(5, oracle::Vec{1.0, 2.0, 4.0})));
  for (double v : a.a.f64()) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(AffinityTest, NegatedPixel) {
  const AffinityMatrix a = pixel_affinity(oracle::to_tensor({{1.0, 2.0, 4.0}, {-1.0, -2.0, -4.0}}));
  EXPECT_NEAR(a.a.at(0, 1), -1.0, 1e-15);
  EXPECT_NEAR(a.a.at(1, 0), -1.0, 1e-15);
}

TEST(AffinityTest, MatchesPairwisePearson) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = oracle::random_mat(rng, 6, 4);
    const AffinityMatrix a = pixel_affinity(oracle::to_tensor(f));
    for (std::size_t u = 0; u < 6; ++u)
      for (std::size_t v = 0; v < 6; ++v) EXPECT_NEAR(a.a.at(u, v), oracle::pearson(f[u], f[v]), 1e-12);
  }
}

TEST(AffinityTest, FlatPixelIsolated) {
  const AffinityMatrix a = pixel_affinity(oracle::to_tensor({{1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}, {3.0, 2.0, 2.0}}));
  EXPECT_EQ(a.a.at(0, 0), 1.0);
  EXPECT_EQ(a.a.at(0, 1), 0.0);
  EXPECT_EQ(a.a.at(2, 0), 0.0);
}

TEST(AffinityTest, CapAndDepthChecks) {
  EXPECT_THROW(pixel_affinity(Tensor::zeros({kMaxAffinityPixels + 1, 2})), ConfigError);
  EXPECT_THROW(pixel_affinity(Tensor::zeros({3, 1})), ContractError);
}

TEST(PixelContextTest, FixedPointAndSingleton) {
  const oracle::Mat same(4, oracle::Vec{0.5, -1.0, 2.0});
  const Tensor f = oracle::to_tensor(same);
  const Tensor c = pixel_context(Var::constant(f), pixel_affinity(f)).value();
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c.f64()[i], f.f64()[i], 1e-15);
  const Tensor one = oracle::to_tensor({{0.3, 0.1, -0.2}});
  EXPECT_TRUE(pixel_context(Var::constant(one), pixel_affinity(one)).value().identical(one));
}

TEST(PixelContextTest, MatchesWeightedSum) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = oracle::random_mat(rng, 4, 3);
    const Tensor c = pixel_context(Var::constant(oracle::to_tensor(f)), pixel_affinity(oracle::to_tensor(f))).value();
    for (std::size_t u = 0; u < 4; ++u) {
      oracle::Vec z(4);
      for (std::size_t v = 0; v < 4; ++v) z[v] = oracle::pearson(f[u], f[v]);
      const auto w = oracle::softmax(z);
      for (std::size_t j = 0; j < 3; ++j) {
        double want = 0.0;
        for (std::size_t v = 0; v < 4; ++v) want += w[v] * f[v][j];
        EXPECT_NEAR(c.at(u, j), want, 1e-12);
      }
    }
  }
}

TEST(PositiveSetTest, Examples) {
  const AffinityMatrix same = pixel_affinity(oracle::to_tensor(oracle::Mat(3, oracle::Vec{1.0, 2.0, 4.0})));
  EXPECT_EQ(positive_set(same, 1, 0.5), (std::vector<std::size_t>{0, 1, 2}));
  // [1, 0, -1] and [1, -2, 1] have correlation 0.
  const AffinityMatrix orth = pixel_affinity(oracle::to_tensor({{1.0, 0.0, -1.0}, {1.0, -2.0, 1.0}}));
  EXPECT_NEAR(orth.a.at(0, 1), 0.0, 1e-15);
  EXPECT_EQ(positive_set(orth, 0, 0.5), (std::vector<std::size_t>{0}));
}

TEST(PositiveSetTest, MatchesThresholdScan) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = oracle::random_mat(rng, 8, 3);
    const AffinityMatrix a = pixel_affinity(oracle::to_tensor(f));
    for (std::size_t u = 0; u < 8; ++u) {
      std::vector<std::size_t> want;
      for (std::size_t v = 0; v < 8; ++v)
        if (v == u || oracle::pearson(f[u], f[v]) >= 0.5) want.push_back(v);
      EXPECT_EQ(positive_set(a, u, 0.5), want);
    }
  }
}

TEST(ClusterTest, SeparableBlobs) {
  oracle::Mat f;
  for (int i = 0; i < 6; ++i) f.push_back({5.0, 5.0, 0.0});
  for (int i = 0; i < 4; ++i) f.push_back({-5.0, 0.0, 3.0});
  const Tensor t = oracle::to_tensor(f);
  const GroupSet g = cluster_pixels(t, t, 2, 11);
  for (int i = 1; i < 6; ++i) EXPECT_EQ(g.assignment[i], g.assignment[0]);
  for (int i = 7; i < 10; ++i) EXPECT_EQ(g.assignment[i], g.assignment[6]);
  EXPECT_NE(g.assignment[0], g.assignment[6]);
}

TEST(ClusterTest, SingleGroupIsGlobalMean) {
  Rng rng(4);
  const auto f = oracle::random_mat(rng, 10, 3);
  const GroupSet g = cluster_pixels(oracle::to_tensor(f), oracle::to_tensor(f), 1, 0);
  for (std::size_t j = 0; j < 3; ++j) {
    double m = 0.0;
    for (const auto& r : f) m += r[j];
    EXPECT_NEAR(g.prototypes.at(0, j), m / 10.0, 1e-12);
  }
}

TEST(ClusterTest, TooManyGroups) {
  EXPECT_THROW(cluster_pixels(Tensor::zeros({3, 2}), Tensor::zeros({3, 2}), 4, 0), ConfigError);
}

TEST(ClusterTest, BeatsRandomAssignments) {
  Rng rng(5);
  oracle::Mat f;
  const double centres[3][2] = {{0, 0}, {4, 1}, {1, 5}};
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 8; ++i) f.push_back({centres[c][0] + rng.uniform(-0.5, 0.5), centres[c][1] + rng.uniform(-0.5, 0.5)});
  const auto ctx = oracle::from_tensor(
      pixel_context(Var::constant(oracle::to_tensor(f)), pixel_affinity(oracle::to_tensor(f))).value());
  const GroupSet g = cluster_pixels(oracle::to_tensor(f), oracle::to_tensor(ctx), 3, 7);
  const auto x = augmented(f, ctx);
  const double got = sse(x, g.assignment, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> r(f.size());
    for (int& a : r) a = static_cast<int>(rng.below(3));
    EXPECT_LE(got, sse(x, r, 3) + 1e-12);
  }
}

TEST(ClusterTest, DeterministicPerSeed) {
  Rng rng(6);
  const Tensor f = oracle::to_tensor(oracle::random_mat(rng, 30, 4));
  const GroupSet a = cluster_pixels(f, f, 3, 9), b = cluster_pixels(f, f, 3, 9);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_TRUE(a.prototypes.identical(b.prototypes));
}

TEST(GroupContextTest, Means) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ctx = oracle::random_mat(rng, 9, 3);
    GroupSet g;
    g.groups = 3;
    for (std::size_t u = 0; u < 9; ++u) g.assignment.push_back(static_cast<int>(u % 3));
    const Tensor c = group_context(Var::constant(oracle::to_tensor(ctx)), g).value();
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t j = 0; j < 3; ++j) {
        const double want = (ctx[k][j] + ctx[k + 3][j] + ctx[k + 6][j]) / 3.0;
        EXPECT_NEAR(c.at(k, j), want, 1e-12);
      }
  }
  GroupSet one;
  one.groups = 1;
  one.assignment.assign(4, 0);
  const Tensor same = oracle::to_tensor(oracle::Mat(4, oracle::Vec{1.5, -2.0}));
  const Tensor c = group_context(Var::constant(same), one).value();
  EXPECT_EQ(c.at(0, 0), 1.5);
  EXPECT_EQ(c.at(0, 1), -2.0);
}

PseudoLabelMap label_map(std::vector<std::uint16_t> v) {
  const std::size_t n = v.size();
  return PseudoLabelMap{Tensor({1, n}, std::move(v))};
}

TEST(GroupClassTest, MajorityAndTies) {
  GroupSet g;
  g.groups = 2;
  g.assignment = {0, 0, 0, 1, 1, 1, 1};
  EXPECT_EQ(assign_group_classes(g, label_map({2, 2, 2, 1, 1, 2, 2}), {1, 2}), (std::vector<int>{2, 1}));
  EXPECT_EQ(assign_group_classes(g, label_map({3, 3, 0, 1, 1, 2, 2}), {1, 2}), (std::vector<int>{0, 1}));
}

TEST(GroupClassTest, MatchesCountingOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    GroupSet g;
    g.groups = 3;
    std::vector<std::uint16_t> y;
    for (int u = 0; u < 20; ++u) {
      g.assignment.push_back(static_cast<int>(rng.below(3)));
      y.push_back(static_cast<std::uint16_t>(rng.below(4)));
    }
    const std::vector<int> present{1, 3};
    std::vector<int> want;
    for (int k = 0; k < 3; ++k) {
      int best = 0, best_n = 0;
      for (int c : {0, 1, 3}) {
        int n = 0;
        for (int u = 0; u < 20; ++u) n += g.assignment[u] == k && y[u] == c;
        if (n > best_n) {
          best_n = n;
          best = c;
        }
      }
      want.push_back(best);
    }
    EXPECT_EQ(assign_group_classes(g, label_map(y), present), want);
  }
}

// 500 random feature maps: partition, affinity, objective and prototype
// invariants.
TEST(GroupingPropertyTest, FiveHundredCases) {
  for (std::uint64_t s = 0; s < 500; ++s) {
    Rng rng(derive_seed(s, 0x91));
    const std::size_t v = 4 + rng.below(40), d = 2 + rng.below(6), groups = 1 + rng.below(std::min<std::size_t>(v, 5));
    const auto f = oracle::random_mat(rng, v, d);
    const Tensor ft = oracle::to_tensor(f);
    const AffinityMatrix a = pixel_affinity(ft);
    for (std::size_t u = 0; u < v; ++u) {
      ASSERT_EQ(a.a.at(u, u), 1.0);
      for (std::size_t w = 0; w < v; ++w) {
        ASSERT_NEAR(a.a.at(u, w), a.a.at(w, u), 1e-12);
        ASSERT_LE(std::abs(a.a.at(u, w)), 1.0);
      }
    }
    const Tensor ctx = pixel_context(Var::constant(ft), a).value();
    const GroupSet g = cluster_pixels(ft, ctx, groups, s);
    ASSERT_EQ(g.assignment.size(), v);
    std::vector<std::size_t> seen(groups, 0);
    for (int id : g.assignment) {
      ASSERT_GE(id, 0);
      ASSERT_LT(id, static_cast<int>(groups));
      ++seen[id];
    }
    std::size_t total = 0;
    for (std::size_t n : seen) {
      ASSERT_GT(n, 0u);
      total += n;
    }
    ASSERT_EQ(total, v);
    ASSERT_EQ(g.sizes(), seen);
    for (std::size_t i = 1; i < g.objective_trace.size(); ++i)
      ASSERT_LE(g.objective_trace[i], g.objective_trace[i - 1] + 1e-9) << "seed " << s;
    const Tensor p = group_prototypes(Var::constant(ft), g).value();
    ASSERT_TRUE(p.identical(g.prototypes)) << "seed " << s;
  }
}

}  // namespace
}  // namespace dscl
