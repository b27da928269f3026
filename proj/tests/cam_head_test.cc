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
#include <vector>

#include <gtest/gtest.h>

#include "dscl/cam_head.h"
#include "dscl/errors.h"
#include "dscl/ops.h"
#include "dscl/rng.h"
#include "oracles.h"

namespace dscl {
namespace {

FeatureMap feature_map(const oracle::Mat& f, std::size_t h, std::size_t w) {
  return FeatureMap{Var::constant(oracle::to_tensor(f)), h, w};
}

std::vector<int> labels_of(const PseudoLabelMap& y) {
  std::vector<int> out;
  for (std::uint16_t v : y.labels.u16()) out.push_back(v);
  return out;
}

// Best id among present plus background, scanning every channel and keeping
// the first maximum in ascending id order.
std::vector<int> scan_argmax(const oracle::Mat& s, const std::vector<int>& present) {
  std::vector<int> out;
  for (const auto& row : s) {
    int best = -1;
    for (int k = 0; k < static_cast<int>(row.size()); ++k) {
      const bool allowed = k == 0 || std::find(present.begin(), present.end(), k) != present.end();
      if (allowed && (best < 0 || row[k] > row[best])) best = k;
    }
    out.push_back(best);
  }
  return out;
}

TEST(CamForwardTest, IdentityWeightsCopyFeatures) {
  Rng rng(1);
  const auto f = oracle::random_mat(rng, 6, 3);
  const Var eye = Var::constant(Tensor({3, 3}, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1}));
  const CamStack o = cam_forward(feature_map(f, 2, 3), eye);
  EXPECT_TRUE(o.scores.value().identical(oracle::to_tensor(f)));
  EXPECT_FALSE(o.refined);
}

TEST(CamForwardTest, ZeroFeaturesZeroScores) {
  Rng rng(1);
  const Var w = Var::constant(oracle::to_tensor(oracle::random_mat(rng, 4, 3)));
  const CamStack o = cam_forward(feature_map(oracle::Mat(6, oracle::Vec(3, 0.0)), 2, 3), w);
  for (double v : o.scores.value().f64()) EXPECT_EQ(v, 0.0);
}

TEST(CamForwardTest, MatchesPerPixelDot) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = oracle::random_mat(rng, 12, 5), w = oracle::random_mat(rng, 4, 5);
    const Tensor s = cam_forward(feature_map(f, 3, 4), Var::constant(oracle::to_tensor(w))).scores.value();
    for (std::size_t p = 0; p < 12; ++p)
      for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(s.at(p, k), oracle::dot(f[p], w[k]), 1e-12);
  }
}

TEST(CamForwardTest, DepthMismatch) {
  const Var w = Var::constant(Tensor::zeros({3, 4}));
  EXPECT_THROW(cam_forward(feature_map(oracle::Mat(4, oracle::Vec(3, 1.0)), 2, 2), w), ShapeError);
}

TEST(CamForwardTest, LinearInFeaturesAndWeights) {
  Rng rng(3);
  const auto f1 = oracle::random_mat(rng, 6, 4), f2 = oracle::random_mat(rng, 6, 4);
  const auto w = oracle::random_mat(rng, 3, 4);
  oracle::Mat fs = f1;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 4; ++j) fs[i][j] += f2[i][j];
  const Var wv = Var::constant(oracle::to_tensor(w));
  const Tensor a = cam_forward(feature_map(f1, 2, 3), wv).scores.value();
  const Tensor b = cam_forward(feature_map(f2, 2, 3), wv).scores.value();
  const Tensor c = cam_forward(feature_map(fs, 2, 3), wv).scores.value();
  for (std::size_t i = 0; i < 18; ++i) EXPECT_NEAR(c.f64()[i], a.f64()[i] + b.f64()[i], 1e-12);
}

TEST(RefinedCamTest, SameContractAtDoubleDepth) {
  Rng rng(4);
  const auto f = oracle::random_mat(rng, 4, 6), w = oracle::random_mat(rng, 3, 6);
  const CamStack o = refined_cam(feature_map(f, 2, 2), Var::constant(oracle::to_tensor(w)));
  EXPECT_TRUE(o.refined);
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(o.scores.value().at(p, k), oracle::dot(f[p], w[k]), 1e-12);
  std::vector<double> eye(36, 0.0);
  for (std::size_t i = 0; i < 6; ++i) eye[i * 7] = 1.0;
  const CamStack id = refined_cam(feature_map(f, 2, 2), Var::constant(Tensor({6, 6}, eye)));
  EXPECT_TRUE(id.scores.value().identical(oracle::to_tensor(f)));
  EXPECT_THROW(refined_cam(feature_map(f, 2, 2), Var::constant(Tensor::zeros({3, 5}))), ShapeError);
}

TEST(PseudoLabelTest, OneHotStack) {
  for (int hot = 0; hot < 3; ++hot) {
    oracle::Mat s(4, oracle::Vec(3, 0.0));
    for (auto& row : s) row[hot] = 1.0;
    const PseudoLabelMap y = argmax_labels(oracle::to_tensor(s), 2, 2, {1, 2});
    for (int v : labels_of(y)) EXPECT_EQ(v, hot);
  }
}

TEST(PseudoLabelTest, TiesGoToBackground) {
  const PseudoLabelMap y = argmax_labels(Tensor::filled({4, 3}, 0.7), 2, 2, {1, 2});
  for (int v : labels_of(y)) EXPECT_EQ(v, 0);
}

TEST(PseudoLabelTest, MatchesExhaustiveScan) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = oracle::random_mat(rng, 16, 3);
    const std::vector<int> present = trial % 2 ? std::vector<int>{2} : std::vector<int>{1, 2};
    const CamStack o{Var::constant(oracle::to_tensor(s)), 4, 4, false};
    EXPECT_EQ(labels_of(pseudo_labels(o, present)), scan_argmax(s, present));
    EXPECT_EQ(labels_of(update_pseudo_labels(o, present)), scan_argmax(s, present));
  }
}

TEST(PseudoLabelTest, AbsentClassesNeverEmitted) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = oracle::random_mat(rng, 9, 5);
    for (int v : labels_of(argmax_labels(oracle::to_tensor(s), 3, 3, {3}))) EXPECT_TRUE(v == 0 || v == 3);
  }
}

TEST(PseudoLabelTest, RejectsOutOfRangeClass) {
  EXPECT_THROW(argmax_labels(Tensor::zeros({4, 3}), 2, 2, {3}), ContractError);
}

TEST(ClassificationLogitsTest, GlobalAveragePool) {
  const CamStack c{Var::constant(Tensor::filled({6, 3}, 2.5)), 2, 3, false};
  const Var lc = classification_logits(c);
  for (double v : lc.value().f64()) EXPECT_EQ(v, 2.5);
  const CamStack z{Var::constant(Tensor::zeros({6, 3})), 2, 3, false};
  const Var lz = classification_logits(z);
  for (double v : lz.value().f64()) EXPECT_EQ(v, 0.0);
  Rng rng(7);
  const auto s = oracle::random_mat(rng, 6, 3);
  const Tensor l = classification_logits(CamStack{Var::constant(oracle::to_tensor(s)), 2, 3, false}).value();
  for (std::size_t k = 0; k < 3; ++k) {
    double m = 0.0;
    for (const auto& row : s) m += row[k];
    EXPECT_NEAR(l.f64()[k], m / 6.0, 1e-12);
  }
}

Var logits(std::vector<double> z) {
  const std::size_t n = z.size();
  return Var::parameter(Tensor({n}, std::move(z)));
}

TEST(CeLossTest, Saturation) {
  EXPECT_LT(ce_loss(logits({0.0, 30.0, -30.0, 30.0}), {1, 3}).item(), 1e-9);
}

TEST(CeLossTest, ZeroLogitsGiveLn2) {
  EXPECT_NEAR(ce_loss(logits({0, 0, 0, 0}), {2}).item(), std::log(2.0), 1e-15);
}

TEST(CeLossTest, MatchesDirectFormula) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> z(5);
    for (double& v : z) v = rng.uniform(-4, 4);
    const std::vector<int> y{1, 4};
    double want = 0.0;
    for (int k = 1; k < 5; ++k) {
      const double sig = 1.0 / (1.0 + std::exp(-z[k]));
      const double t = (k == 1 || k == 4) ? 1.0 : 0.0;
      want -= t * std::log(sig) + (1 - t) * std::log(1 - sig);
    }
    EXPECT_NEAR(ce_loss(logits(z), y).item(), want / 4.0, 1e-12);
  }
}

TEST(CeLossTest, BackgroundLogitIgnored) {
  const Var a = logits({-5.0, 1.0, -1.0}), b = logits({7.0, 1.0, -1.0});
  EXPECT_EQ(ce_loss(a, {1}).item(), ce_loss(b, {1}).item());
}

TEST(CeLossTest, NonNegativeAndDecreasingInPresentLogit) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(4);
    for (double& v : z) v = rng.uniform(-6, 6);
    const Var l = logits(z);
    const Var loss = ce_loss(l, {2});
    EXPECT_GE(loss.item(), 0.0);
    const GradMap g = backward(loss);
    EXPECT_LT(g.at(l.node()).f64()[2], 0.0);
    // Finite-difference sign agrees.
    auto zp = z;
    zp[2] += 1e-4;
    EXPECT_LT(ce_loss(logits(zp), {2}).item(), loss.item());
  }
}

TEST(CamInvarianceTest, ShiftAndPositiveScale) {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = oracle::random_mat(rng, 8, 4, 0.0, 1.0);
    const auto base = labels_of(argmax_labels(oracle::to_tensor(s), 2, 4, {1, 3}));
    auto shifted = s, scaled = s;
    for (std::size_t p = 0; p < 8; ++p) {
      const double c = rng.uniform(-5, 5), a = rng.uniform(0.1, 10);
      for (std::size_t k = 0; k < 4; ++k) {
        shifted[p][k] += c;
        scaled[p][k] *= a;
      }
    }
    EXPECT_EQ(labels_of(argmax_labels(oracle::to_tensor(shifted), 2, 4, {1, 3})), base);
    EXPECT_EQ(labels_of(argmax_labels(oracle::to_tensor(scaled), 2, 4, {1, 3})), base);
  }
}

}  // namespace
}  // namespace dscl
