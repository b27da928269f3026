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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dscl/autograd.h"
#include "dscl/tensor.h"

namespace dscl {

// Scalar similarity measures on plain vectors.

// u.v / (|u| |v|). Throws DegenerateVectorError if either norm is zero.
double cosine_similarity(std::span<const double> u, std::span<const double> v);
// Pearson correlation. Needs D >= 2 and nonzero variance on both sides.
double pearson_corr(std::span<const double> u, std::span<const double> v);

// Differentiable operations. Matrices are rank-2 row-major; a "vector" is any
// tensor whose elements are addressed flat.

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_n(const std::vector<Var>& terms);

Var sum(const Var& a);
Var mean(const Var& a);

Var exp(const Var& a);
Var log(const Var& a);
Var relu(const Var& a);
// log(1 / (1 + e^-x)), evaluated without overflow.
Var log_sigmoid(const Var& a);

Var reshape(const Var& a, Shape shape);
Var transpose(const Var& a);

// a[m x k] * b[k x n].
Var matmul(const Var& a, const Var& b);
// a[m x k] * b[n x k]^T.
Var matmul_nt(const Var& a, const Var& b);

// Row-wise softmax with per-row max subtraction.
Var softmax_rows(const Var& a);
// Softmax over the columns with keep[c] set; the other columns are exactly 0.
Var softmax_rows_masked(const Var& a, const std::vector<bool>& keep);
// log(sum(exp(a))) over every element.
Var logsumexp(const Var& a);

// x / max(|x|, eps) per row.
Var normalize_rows(const Var& a, double eps = 1e-12);

Var concat_cols(const Var& a, const Var& b);
Var concat_rows(const std::vector<Var>& parts);
Var gather_rows(const Var& a, const std::vector<std::size_t>& rows);
// Flat element i as a scalar.
Var element(const Var& a, std::size_t i);
// Flat elements at `idx` as a vector [n].
Var gather(const Var& a, const std::vector<std::size_t>& idx);
// Column means of a[r x c] -> [c].
Var mean_rows(const Var& a);
// out[g] = mean of rows r with ids[r] == g. Negative ids are skipped and
// groups without members come out as zero rows.
Var segment_mean(const Var& a, const std::vector<int>& ids, std::size_t groups);

// 3x3 convolution with zero padding 1 on an [H, W, Cin] map.
// Weights are [3, 3, Cin, Cout], bias [Cout]. Output [ceil(H/s), ceil(W/s), Cout].
Var conv2d_3x3(const Var& x, const Var& w, const Var& b, std::size_t stride);

// Plain row-major matrix product used by non-differentiated code paths.
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t n, std::size_t k);

}  // namespace dscl
