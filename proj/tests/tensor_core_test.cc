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
#include <functional>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dscl/autograd.h"
#include "dscl/errors.h"
#include "dscl/grad_check.h"
#include "dscl/ops.h"
#include "dscl/rng.h"
#include "oracles.h"

namespace dscl {
namespace {

Var param(oracle::Mat m) { return Var::parameter(oracle::to_tensor(m)); }

Tensor mat(std::size_t r, std::size_t c, std::vector<double> v) { return Tensor({r, c}, std::move(v)); }

TEST(TensorTest, ShapeAndDtype) {
  Tensor t = Tensor::zeros({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.dtype(), DType::kFloat64);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1.0}), ShapeError);
  EXPECT_THROW(t.u16(), ContractError);
  EXPECT_EQ(Tensor::scalar(2.5).item(), 2.5);
}

TEST(MatmulTest, IdentityAndZero) {
  const Var a = Var::constant(mat(2, 2, {1, 0, 0, 1}));
  const Var b = Var::constant(mat(2, 2, {1, 2, 3, 4}));
  EXPECT_TRUE(matmul(a, b).value().identical(b.value()));
  const Var z = Var::constant(Tensor::zeros({2, 2}));
  EXPECT_TRUE(matmul(b, z).value().identical(Tensor::zeros({2, 2})));
}

TEST(MatmulTest, MatchesTripleLoop) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = oracle::random_mat(rng, 3, 4), b = oracle::random_mat(rng, 4, 2);
    const auto want = oracle::matmul(a, b);
    const Tensor got = matmul(param(a), param(b)).value();
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(got.at(i, j), want[i][j], 1e-12 * std::max(1.0, std::abs(want[i][j])));
  }
}

TEST(MatmulTest, MismatchNamesBothOperands) {
  try {
    matmul(Var::constant(Tensor::zeros({2, 3})), Var::constant(Tensor::zeros({2, 3})));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
  }
}

TEST(SoftmaxTest, UniformRow) {
  const Tensor s = softmax_rows(Var::constant(mat(1, 3, {0, 0, 0}))).value();
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(s.at(0, j), 1.0 / 3.0, 1e-15);
}

TEST(SoftmaxTest, ShiftInvariant) {
  const Tensor a = softmax_rows(Var::constant(mat(1, 3, {1.0, 1.5, 2.0}))).value();
  const Tensor b = softmax_rows(Var::constant(mat(1, 3, {-40.0, -39.5, -39.0}))).value();
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.at(0, j), b.at(0, j), 1e-12);
}

TEST(SoftmaxTest, MatchesDirectFormula) {
  const Tensor s = softmax_rows(Var::constant(mat(1, 3, {1, 2, 3}))).value();
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(s.at(0, j), std::exp(j + 1.0) / z, 1e-12);
}

TEST(SoftmaxTest, RowsSumToOneOnLargeInputs) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor s = softmax_rows(param(oracle::random_mat(rng, 4, 5, -300.0, 300.0))).value();
    for (std::size_t i = 0; i < 4; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < 5; ++j) {
        EXPECT_GE(s.at(i, j), 0.0);
        EXPECT_LE(s.at(i, j), 1.0);
        total += s.at(i, j);
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}

TEST(SimilarityTest, Cosine) {
  const std::vector<double> u{3, 4}, x{1, 0}, y{0, 1};
  EXPECT_DOUBLE_EQ(cosine_similarity(u, u), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(x, y), 0.0);
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  EXPECT_NEAR(cosine_similarity(a, b), 32.0 / std::sqrt(14.0 * 77.0), 1e-15);
  const std::vector<double> zero{0, 0};
  EXPECT_THROW(cosine_similarity(zero, u), DegenerateVectorError);
}

TEST(SimilarityTest, Pearson) {
  const std::vector<double> u{1, 2, 3}, neg{-1, -2, -3}, w{1, 2, 4};
  EXPECT_NEAR(pearson_corr(u, u), 1.0, 1e-15);
  EXPECT_NEAR(pearson_corr(u, neg), -1.0, 1e-15);
  // cov = 1.5, var(u) = 1 * 2, var(w) = 2 * 7/3 around the sample means.
  EXPECT_NEAR(pearson_corr(u, w), 3.0 / std::sqrt(2.0 * 14.0 / 3.0), 1e-15);
  const std::vector<double> flat{2, 2, 2};
  EXPECT_THROW(pearson_corr(flat, u), DegenerateVectorError);
}

TEST(SimilarityTest, SymmetricAndAffineInvariant) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> u(6), v(6), w(6);
    for (std::size_t i = 0; i < 6; ++i) {
      u[i] = rng.uniform(-1, 1);
      v[i] = rng.uniform(-1, 1);
      w[i] = 2.5 * u[i] + 0.7;
    }
    EXPECT_NEAR(cosine_similarity(u, v), cosine_similarity(v, u), 1e-15);
    EXPECT_NEAR(pearson_corr(u, v), pearson_corr(v, u), 1e-15);
    EXPECT_NEAR(pearson_corr(u, v), pearson_corr(w, v), 1e-12);
    EXPECT_NEAR(pearson_corr(u, v), oracle::pearson(u, v), 1e-12);
  }
}

TEST(BackwardTest, SumGivesOnes) {
  const Var x = Var::parameter(mat(2, 2, {1, -2, 3, 4}));
  const GradMap g = backward(sum(x));
  for (double v : g.at(x.node()).f64()) EXPECT_EQ(v, 1.0);
}

TEST(BackwardTest, MatmulTransposeFormula) {
  Rng rng(5);
  const auto a = oracle::random_mat(rng, 3, 4), b = oracle::random_mat(rng, 4, 2);
  const Var va = param(a), vb = param(b);
  const GradMap g = backward(sum(matmul(va, vb)));
  // d/da sum(ab) = 1 b^T, d/db = a^T 1.
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(g.at(va.node()).at(i, t), b[t][0] + b[t][1], 1e-14);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(g.at(vb.node()).at(t, j), a[0][t] + a[1][t] + a[2][t], 1e-14);
}

TEST(BackwardTest, TwoConsumersAccumulate) {
  // y = x*x + 3x through two paths sharing x: dy/dx = 2x + 3.
  const Var x = Var::parameter(mat(1, 2, {1.5, -0.5}));
  const Var y = sum(add(mul(x, x), scale(x, 3.0)));
  const GradMap g = backward(y);
  EXPECT_DOUBLE_EQ(g.at(x.node()).f64()[0], 6.0);
  EXPECT_DOUBLE_EQ(g.at(x.node()).f64()[1], 2.0);
}

TEST(BackwardTest, SharedIntermediateVisitedOnce) {
  // h = exp(x) used twice: d/dx (h + h) = 2 exp(x).
  const Var x = Var::parameter(Tensor::scalar(0.3));
  const Var h = exp(x);
  const GradMap g = backward(add(h, h));
  EXPECT_NEAR(g.at(x.node()).item(), 2.0 * std::exp(0.3), 1e-15);
}

TEST(BackwardTest, ConstantsGetNoGradient) {
  const Var x = Var::parameter(Tensor::scalar(1.0));
  const Var c = Var::constant(Tensor::scalar(2.0));
  const GradMap g = backward(mul(x, c));
  EXPECT_EQ(g.count(c.node()), 0u);
  EXPECT_EQ(g.at(x.node()).item(), 2.0);
}

TEST(BackwardTest, NonScalarRootRejected) {
  EXPECT_THROW(backward(Var::parameter(Tensor::zeros({2}))), ContractError);
}

TEST(FiniteDiffTest, Quadratic) {
  const Var x = Var::parameter(Tensor({2}, std::vector<double>{1.0, 2.0}));
  const GradReport r = finite_diff_check([&] { return sum(mul(x, x)); }, {{"x", x}}, 1e-5, 1e-9);
  EXPECT_TRUE(r.pass) << r.max_rel_error;
  EXPECT_LT(r.max_rel_error, 1e-9);
}

TEST(FiniteDiffTest, SoftmaxDotPasses) {
  Rng rng(2);
  const Var x = param(oracle::random_mat(rng, 3, 4));
  const Var w = Var::constant(oracle::to_tensor(oracle::random_mat(rng, 3, 4)));
  const GradReport r = finite_diff_check([&] { return sum(mul(softmax_rows(x), w)); }, {{"x", x}});
  EXPECT_TRUE(r.pass) << r.max_rel_error;
}

TEST(FiniteDiffTest, CorruptedGradientRejected) {
  Rng rng(2);
  const Var x = param(oracle::random_mat(rng, 3, 4));
  const Var w = Var::constant(oracle::to_tensor(oracle::random_mat(rng, 3, 4)));
  const GradReport r = finite_diff_check_with(
      [&] { return sum(mul(softmax_rows(x), w)); }, {{"x", x}}, 1e-5, 1e-4,
      [](std::vector<double>& g) {
        for (double& v : g) v *= 1.01;
      });
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.pass, r.max_rel_error <= r.tolerance);
}

struct Input {
  Shape shape;
  double lo = -1.0;
  double hi = 1.0;
};

struct OpCase {
  std::string name;
  std::vector<Input> inputs;
  std::function<Var(const std::vector<Var>&)> apply;
};

std::vector<OpCase> op_cases() {
  using V = const std::vector<Var>&;
  const Input m23{{2, 3}};
  std::vector<OpCase> c;
  c.push_back({"add", {m23, m23}, [](V x) { return add(x[0], x[1]); }});
  c.push_back({"sub", {m23, m23}, [](V x) { return sub(x[0], x[1]); }});
  c.push_back({"mul", {m23, m23}, [](V x) { return mul(x[0], x[1]); }});
  c.push_back({"scale", {m23}, [](V x) { return scale(x[0], -1.7); }});
  c.push_back({"add_n", {m23, m23, m23}, [](V x) { return add_n({x[0], x[1], x[2]}); }});
  c.push_back({"sum", {m23}, [](V x) { return sum(x[0]); }});
  c.push_back({"mean", {m23}, [](V x) { return mean(x[0]); }});
  c.push_back({"exp", {m23}, [](V x) { return exp(x[0]); }});
  c.push_back({"log", {{{2, 3}, 0.5, 2.0}}, [](V x) { return log(x[0]); }});
  // Shifted away from the kink so the central difference is exact.
  c.push_back({"relu", {{{2, 3}, 0.1, 1.0}, m23}, [](V x) { return relu(mul(x[0], x[1])); }});
  c.push_back({"log_sigmoid", {{{2, 3}, -5.0, 5.0}}, [](V x) { return log_sigmoid(x[0]); }});
  c.push_back({"reshape", {m23}, [](V x) { return reshape(x[0], {3, 2}); }});
  c.push_back({"transpose", {m23}, [](V x) { return transpose(x[0]); }});
  c.push_back({"matmul", {m23, {{3, 2}}}, [](V x) { return matmul(x[0], x[1]); }});
  c.push_back({"matmul_nt", {m23, {{4, 3}}}, [](V x) { return matmul_nt(x[0], x[1]); }});
  c.push_back({"softmax_rows", {{{3, 4}, -3.0, 3.0}}, [](V x) { return softmax_rows(x[0]); }});
  c.push_back({"softmax_rows_masked", {{{3, 4}, -3.0, 3.0}},
               [](V x) { return softmax_rows_masked(x[0], {true, false, true, true}); }});
  c.push_back({"logsumexp", {{{2, 3}, -3.0, 3.0}}, [](V x) { return logsumexp(x[0]); }});
  c.push_back({"normalize_rows", {{{3, 4}}}, [](V x) { return normalize_rows(x[0]); }});
  c.push_back({"concat_cols", {m23, {{2, 1}}}, [](V x) { return concat_cols(x[0], x[1]); }});
  c.push_back({"concat_rows", {m23, {{1, 3}}}, [](V x) { return concat_rows({x[0], x[1]}); }});
  c.push_back({"gather_rows", {{{3, 2}}}, [](V x) { return gather_rows(x[0], {2, 0, 2}); }});
  c.push_back({"element", {m23}, [](V x) { return element(x[0], 4); }});
  c.push_back({"gather", {m23}, [](V x) { return gather(x[0], {5, 1, 1}); }});
  c.push_back({"mean_rows", {{{4, 3}}}, [](V x) { return mean_rows(x[0]); }});
  c.push_back({"segment_mean", {{{5, 3}}}, [](V x) { return segment_mean(x[0], {0, 2, -1, 0, 2}, 3); }});
  c.push_back({"conv2d_3x3", {{{4, 3, 2}}, {{3, 3, 2, 3}}, {{3}}},
               [](V x) { return conv2d_3x3(x[0], x[1], x[2], 2); }});
  return c;
}

// Every differentiable op against central differences at 100 random points.
TEST(OpGradientTest, HundredRandomPointsPerOp) {
  for (const OpCase& c : op_cases()) {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      Rng rng(derive_seed(s, 0x9e));
      std::vector<Var> xs;
      std::vector<NamedParam> ps;
      for (const Input& in : c.inputs) {
        std::vector<double> v(shape_numel(in.shape));
        for (double& e : v) e = rng.uniform(in.lo, in.hi);
        xs.push_back(Var::parameter(Tensor(in.shape, std::move(v))));
        ps.push_back({"x" + std::to_string(ps.size()), xs.back()});
      }
      const Shape out_shape = c.apply(xs).shape();
      std::vector<double> w(shape_numel(out_shape));
      for (double& e : w) e = rng.uniform(-1.0, 1.0);
      const Var weights = Var::constant(Tensor(out_shape, std::move(w)));
      const GradReport r = finite_diff_check([&] { return sum(mul(c.apply(xs), weights)); }, ps);
      worst = std::max(worst, r.max_rel_error);
    }
    EXPECT_LT(worst, 1e-4) << c.name;
  }
}

}  // namespace
}  // namespace dscl
