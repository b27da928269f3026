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

#include "dscl/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dscl/errors.h"

namespace dscl {

namespace {

std::span<const double> vals(const Var& v) { return v.value().f64(); }
std::span<const double> vals(const Node& n) { return n.value.f64(); }

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": operand shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

void require_matrix(const Var& a, const char* op) {
  if (a.value().rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
  }
}

std::vector<double>& pgrad(Node& n, std::size_t i) { return n.parents[i]->grad_buffer(); }
bool pneeds(const Node& n, std::size_t i) { return n.parents[i]->requires_grad; }

// c[m x n] += a[m x k] * b[k x n]
void gemm_nn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = a[i * k + t];
      if (av == 0.0) continue;
      const double* bt = b + t * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bt[j];
    }
  }
}

// c[m x n] += a[m x k] * b[n x k]^T
void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += ai[t] * bj[t];
      c[i * n + j] += s;
    }
  }
}

// c[k x n] += a[m x k]^T * b[m x n]
void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* bi = b + i * n;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = a[i * k + t];
      if (av == 0.0) continue;
      double* ct = c + t * n;
      for (std::size_t j = 0; j < n; ++j) ct[j] += av * bi[j];
    }
  }
}

template <typename F>
Var unary(const Var& a, const char* tag, F fwd, auto bwd) {
  auto x = vals(a);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  return make_var(Tensor(a.shape(), std::move(y)), {a}, tag, [bwd](Node& n) {
    auto x = vals(*n.parents[0]);
    auto y = vals(n);
    auto& gx = pgrad(n, 0);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += n.grad[i] * bwd(x[i], y[i]);
  });
}

}  // namespace

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ShapeError("cosine_similarity: lengths " + std::to_string(u.size()) + " and " +
                     std::to_string(v.size()));
  }
  double uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw DegenerateVectorError("cosine_similarity: zero-norm vector");
  return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

double pearson_corr(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ShapeError("pearson_corr: lengths " + std::to_string(u.size()) + " and " +
                     std::to_string(v.size()));
  }
  if (u.size() < 2) throw ContractError("pearson_corr: needs at least 2 components");
  const double n = static_cast<double>(u.size());
  const double mu = std::accumulate(u.begin(), u.end(), 0.0) / n;
  const double mv = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double suv = 0, suu = 0, svv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i] - mu;
    const double dv = v[i] - mv;
    suv += du * dv;
    suu += du * du;
    svv += dv * dv;
  }
  if (suu == 0.0 || svv == 0.0) throw DegenerateVectorError("pearson_corr: zero-variance vector");
  return std::clamp(suv / (std::sqrt(suu) * std::sqrt(svv)), -1.0, 1.0);
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t n, std::size_t k) {
  std::fill(c.begin(), c.end(), 0.0);
  gemm_nt_acc(a.data(), b.data(), c.data(), m, n, k);
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  auto x = vals(a), y = vals(b);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return make_var(Tensor(a.shape(), std::move(out)), {a, b}, "add", [](Node& n) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (!pneeds(n, p)) continue;
      auto& g = pgrad(n, p);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  auto x = vals(a), y = vals(b);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  return make_var(Tensor(a.shape(), std::move(out)), {a, b}, "sub", [](Node& n) {
    if (pneeds(n, 0)) {
      auto& g = pgrad(n, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
    if (pneeds(n, 1)) {
      auto& g = pgrad(n, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  auto x = vals(a), y = vals(b);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return make_var(Tensor(a.shape(), std::move(out)), {a, b}, "mul", [](Node& n) {
    auto x = vals(*n.parents[0]), y = vals(*n.parents[1]);
    if (pneeds(n, 0)) {
      auto& g = pgrad(n, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * y[i];
    }
    if (pneeds(n, 1)) {
      auto& g = pgrad(n, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * x[i];
    }
  });
}

Var scale(const Var& a, double s) {
  auto x = vals(a);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * s;
  return make_var(Tensor(a.shape(), std::move(out)), {a}, "scale", [s](Node& n) {
    auto& g = pgrad(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * s;
  });
}

Var add_n(const std::vector<Var>& terms) {
  if (terms.empty()) throw ContractError("add_n: no terms");
  for (const Var& t : terms) require_same_shape(terms[0], t, "add_n");
  std::vector<double> out(terms[0].value().size(), 0.0);
  for (const Var& t : terms) {
    auto x = vals(t);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += x[i];
  }
  return make_var(Tensor(terms[0].shape(), std::move(out)), terms, "add_n", [](Node& n) {
    for (std::size_t p = 0; p < n.parents.size(); ++p) {
      if (!pneeds(n, p)) continue;
      auto& g = pgrad(n, p);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  });
}

Var sum(const Var& a) {
  auto x = vals(a);
  const double s = std::accumulate(x.begin(), x.end(), 0.0);
  return make_var(Tensor::scalar(s), {a}, "sum", [](Node& n) {
    auto& g = pgrad(n, 0);
    for (double& v : g) v += n.grad[0];
  });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var exp(const Var& a) {
  return unary(
      a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var& a) {
  for (double x : vals(a)) {
    if (!(x > 0.0)) throw NumericalError("log of non-positive value");
  }
  return unary(
      a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var relu(const Var& a) {
  return unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var log_sigmoid(const Var& a) {
  return unary(
      a, "log_sigmoid",
      [](double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); },
      // d/dx log sigma(x) = 1 - sigma(x) = sigma(-x)
      [](double x, double) {
        return x >= 0.0 ? std::exp(-x) / (1.0 + std::exp(-x)) : 1.0 / (1.0 + std::exp(x));
      });
}

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return make_var(std::move(out), {a}, "reshape", [](Node& n) {
    auto& g = pgrad(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  });
}

Var transpose(const Var& a) {
  require_matrix(a, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  auto x = vals(a);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  return make_var(Tensor({c, r}, std::move(out)), {a}, "transpose", [r, c](Node& n) {
    auto& g = pgrad(n, 0);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += n.grad[j * r + i];
  });
}

Var matmul(const Var& a, const Var& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner extents differ, " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  gemm_nn_acc(vals(a).data(), vals(b).data(), out.data(), m, n, k);
  return make_var(Tensor({m, n}, std::move(out)), {a, b}, "matmul", [m, n, k](Node& node) {
    const double* g = node.grad.data();
    if (pneeds(node, 0)) gemm_nt_acc(g, vals(*node.parents[1]).data(), pgrad(node, 0).data(), m, k, n);
    if (pneeds(node, 1)) gemm_tn_acc(vals(*node.parents[0]).data(), g, pgrad(node, 1).data(), m, n, k);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) {
    throw ShapeError("matmul_nt: inner extents differ, " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()) + "^T");
  }
  std::vector<double> out(m * n, 0.0);
  gemm_nt_acc(vals(a).data(), vals(b).data(), out.data(), m, n, k);
  return make_var(Tensor({m, n}, std::move(out)), {a, b}, "matmul_nt", [m, n, k](Node& node) {
    const double* g = node.grad.data();
    // dA = G B, dB = G^T A
    if (pneeds(node, 0)) gemm_nn_acc(g, vals(*node.parents[1]).data(), pgrad(node, 0).data(), m, k, n);
    if (pneeds(node, 1)) gemm_tn_acc(g, vals(*node.parents[0]).data(), pgrad(node, 1).data(), m, k, n);
  });
}

namespace {

Var softmax_impl(const Var& a, const std::vector<bool>* keep, const char* tag) {
  require_matrix(a, tag);
  const std::size_t r = a.dim(0), c = a.dim(1);
  if (keep != nullptr) {
    if (keep->size() != c) throw ShapeError(std::string(tag) + ": mask length differs from columns");
    if (std::none_of(keep->begin(), keep->end(), [](bool k) { return k; })) {
      throw ContractError(std::string(tag) + ": mask keeps no column");
    }
  }
  auto x = vals(a);
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    const double* xi = x.data() + i * c;
    double* yi = y.data() + i * c;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j)
      if (keep == nullptr || (*keep)[j]) mx = std::max(mx, xi[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (keep != nullptr && !(*keep)[j]) continue;
      yi[j] = std::exp(xi[j] - mx);
      z += yi[j];
    }
    for (std::size_t j = 0; j < c; ++j) yi[j] /= z;
  }
  return make_var(Tensor(a.shape(), std::move(y)), {a}, tag, [r, c](Node& n) {
    auto y = vals(n);
    auto& gx = pgrad(n, 0);
    for (std::size_t i = 0; i < r; ++i) {
      const double* yi = y.data() + i * c;
      const double* gi = n.grad.data() + i * c;
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += yi[j] * gi[j];
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += yi[j] * (gi[j] - dot);
    }
  });
}

}  // namespace

Var softmax_rows(const Var& a) { return softmax_impl(a, nullptr, "softmax_rows"); }

Var softmax_rows_masked(const Var& a, const std::vector<bool>& keep) {
  return softmax_impl(a, &keep, "softmax_rows_masked");
}

Var logsumexp(const Var& a) {
  auto x = vals(a);
  if (x.empty()) throw ContractError("logsumexp of empty tensor");
  const double mx = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double v : x) z += std::exp(v - mx);
  const double out = mx + std::log(z);
  return make_var(Tensor::scalar(out), {a}, "logsumexp", [](Node& n) {
    auto x = vals(*n.parents[0]);
    auto& g = pgrad(n, 0);
    const double lse = n.value.item();
    for (std::size_t i = 0; i < x.size(); ++i) g[i] += n.grad[0] * std::exp(x[i] - lse);
  });
}

Var normalize_rows(const Var& a, double eps) {
  require_matrix(a, "normalize_rows");
  const std::size_t r = a.dim(0), c = a.dim(1);
  auto x = vals(a);
  std::vector<double> y(x.size());
  std::vector<double> norms(r);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += x[i * c + j] * x[i * c + j];
    norms[i] = std::max(std::sqrt(s), eps);
    for (std::size_t j = 0; j < c; ++j) y[i * c + j] = x[i * c + j] / norms[i];
  }
  return make_var(Tensor(a.shape(), std::move(y)), {a}, "normalize_rows",
                  [r, c, eps, norms = std::move(norms)](Node& n) {
                    auto y = vals(n);
                    auto& gx = pgrad(n, 0);
                    for (std::size_t i = 0; i < r; ++i) {
                      const double* yi = y.data() + i * c;
                      const double* gi = n.grad.data() + i * c;
                      if (norms[i] <= eps) {
                        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += gi[j] / eps;
                        continue;
                      }
                      double dot = 0.0;
                      for (std::size_t j = 0; j < c; ++j) dot += yi[j] * gi[j];
                      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += (gi[j] - yi[j] * dot) / norms[i];
                    }
                  });
}

Var concat_cols(const Var& a, const Var& b) {
  require_matrix(a, "concat_cols");
  require_matrix(b, "concat_cols");
  if (a.dim(0) != b.dim(0)) {
    throw ShapeError("concat_cols: row counts differ, " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  const std::size_t r = a.dim(0), ca = a.dim(1), cb = b.dim(1), c = ca + cb;
  auto x = vals(a), y = vals(b);
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    std::copy_n(x.data() + i * ca, ca, out.data() + i * c);
    std::copy_n(y.data() + i * cb, cb, out.data() + i * c + ca);
  }
  return make_var(Tensor({r, c}, std::move(out)), {a, b}, "concat_cols", [r, ca, cb, c](Node& n) {
    if (pneeds(n, 0)) {
      auto& g = pgrad(n, 0);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < ca; ++j) g[i * ca + j] += n.grad[i * c + j];
    }
    if (pneeds(n, 1)) {
      auto& g = pgrad(n, 1);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < cb; ++j) g[i * cb + j] += n.grad[i * c + ca + j];
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no parts");
  for (const Var& p : parts) require_matrix(p, "concat_rows");
  const std::size_t c = parts[0].dim(1);
  std::size_t r = 0;
  for (const Var& p : parts) {
    if (p.dim(1) != c) throw ShapeError("concat_rows: column counts differ");
    r += p.dim(0);
  }
  std::vector<double> out;
  out.reserve(r * c);
  for (const Var& p : parts) {
    auto x = vals(p);
    out.insert(out.end(), x.begin(), x.end());
  }
  return make_var(Tensor({r, c}, std::move(out)), parts, "concat_rows", [](Node& n) {
    std::size_t off = 0;
    for (std::size_t p = 0; p < n.parents.size(); ++p) {
      const std::size_t len = n.parents[p]->value.size();
      if (pneeds(n, p)) {
        auto& g = pgrad(n, p);
        for (std::size_t i = 0; i < len; ++i) g[i] += n.grad[off + i];
      }
      off += len;
    }
  });
}

Var gather_rows(const Var& a, const std::vector<std::size_t>& rows) {
  require_matrix(a, "gather_rows");
  const std::size_t r = a.dim(0), c = a.dim(1);
  if (rows.empty()) throw ContractError("gather_rows: empty index list");
  for (std::size_t idx : rows) {
    if (idx >= r) throw ShapeError("gather_rows: row " + std::to_string(idx) + " out of range");
  }
  auto x = vals(a);
  std::vector<double> out(rows.size() * c);
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(x.data() + rows[i] * c, c, out.data() + i * c);
  return make_var(Tensor({rows.size(), c}, std::move(out)), {a}, "gather_rows", [rows, c](Node& n) {
    auto& g = pgrad(n, 0);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) g[rows[i] * c + j] += n.grad[i * c + j];
  });
}

Var element(const Var& a, std::size_t i) {
  if (i >= a.value().size()) throw ShapeError("element: index out of range");
  return make_var(Tensor::scalar(vals(a)[i]), {a}, "element", [i](Node& n) { pgrad(n, 0)[i] += n.grad[0]; });
}

Var gather(const Var& a, const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw ContractError("gather: empty index list");
  auto x = vals(a);
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= x.size()) throw ShapeError("gather: index out of range");
    out[i] = x[idx[i]];
  }
  return make_var(Tensor({idx.size()}, std::move(out)), {a}, "gather", [idx](Node& n) {
    auto& g = pgrad(n, 0);
    for (std::size_t i = 0; i < idx.size(); ++i) g[idx[i]] += n.grad[i];
  });
}

Var mean_rows(const Var& a) {
  require_matrix(a, "mean_rows");
  const std::size_t r = a.dim(0), c = a.dim(1);
  auto x = vals(a);
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += x[i * c + j];
  for (double& v : out) v /= static_cast<double>(r);
  return make_var(Tensor({c}, std::move(out)), {a}, "mean_rows", [r, c](Node& n) {
    auto& g = pgrad(n, 0);
    const double inv = 1.0 / static_cast<double>(r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += n.grad[j] * inv;
  });
}

Var segment_mean(const Var& a, const std::vector<int>& ids, std::size_t groups) {
  require_matrix(a, "segment_mean");
  const std::size_t r = a.dim(0), c = a.dim(1);
  if (ids.size() != r) {
    throw ShapeError("segment_mean: " + std::to_string(ids.size()) + " ids for " + std::to_string(r) + " rows");
  }
  std::vector<double> counts(groups, 0.0);
  for (int id : ids) {
    if (id >= static_cast<int>(groups)) throw ShapeError("segment_mean: id out of range");
    if (id >= 0) counts[id] += 1.0;
  }
  auto x = vals(a);
  std::vector<double> out(groups * c, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    if (ids[i] < 0) continue;
    double* o = out.data() + ids[i] * c;
    for (std::size_t j = 0; j < c; ++j) o[j] += x[i * c + j];
  }
  for (std::size_t g = 0; g < groups; ++g) {
    if (counts[g] == 0.0) continue;
    for (std::size_t j = 0; j < c; ++j) out[g * c + j] /= counts[g];
  }
  return make_var(Tensor({groups, c}, std::move(out)), {a}, "segment_mean",
                  [ids, c, counts = std::move(counts)](Node& n) {
                    auto& g = pgrad(n, 0);
                    for (std::size_t i = 0; i < ids.size(); ++i) {
                      if (ids[i] < 0) continue;
                      const double inv = 1.0 / counts[ids[i]];
                      const double* go = n.grad.data() + ids[i] * c;
                      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += go[j] * inv;
                    }
                  });
}

Var conv2d_3x3(const Var& x, const Var& w, const Var& b, std::size_t stride) {
  if (x.value().rank() != 3) throw ShapeError("conv2d_3x3: input must be [H, W, C], got " + shape_string(x.shape()));
  const std::size_t h = x.dim(0), wd = x.dim(1), cin = x.dim(2);
  if (w.shape() != Shape{3, 3, cin, w.value().rank() == 4 ? w.dim(3) : 0}) {
    throw ShapeError("conv2d_3x3: weights " + shape_string(w.shape()) + " do not match input " +
                     shape_string(x.shape()));
  }
  const std::size_t cout = w.dim(3);
  if (b.shape() != Shape{cout}) throw ShapeError("conv2d_3x3: bias must be [" + std::to_string(cout) + "]");
  if (stride == 0) throw ContractError("conv2d_3x3: stride must be positive");
  const std::size_t ho = (h + stride - 1) / stride, wo = (wd + stride - 1) / stride;

  auto xv = vals(x), wv = vals(w), bv = vals(b);
  std::vector<double> out(ho * wo * cout);
  for (std::size_t oy = 0; oy < ho; ++oy) {
    for (std::size_t ox = 0; ox < wo; ++ox) {
      double* o = out.data() + (oy * wo + ox) * cout;
      std::copy(bv.begin(), bv.end(), o);
      for (std::size_t ky = 0; ky < 3; ++ky) {
        const long iy = static_cast<long>(oy * stride + ky) - 1;
        if (iy < 0 || iy >= static_cast<long>(h)) continue;
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const long ix = static_cast<long>(ox * stride + kx) - 1;
          if (ix < 0 || ix >= static_cast<long>(wd)) continue;
          const double* in = xv.data() + (iy * wd + ix) * cin;
          const double* wk = wv.data() + (ky * 3 + kx) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double v = in[ci];
            if (v == 0.0) continue;
            const double* wr = wk + ci * cout;
            for (std::size_t co = 0; co < cout; ++co) o[co] += v * wr[co];
          }
        }
      }
    }
  }
  return make_var(Tensor({ho, wo, cout}, std::move(out)), {x, w, b}, "conv2d_3x3",
                  [h, wd, cin, cout, ho, wo, stride](Node& n) {
                    auto xv = vals(*n.parents[0]);
                    auto wv = vals(*n.parents[1]);
                    const bool need_x = pneeds(n, 0), need_w = pneeds(n, 1), need_b = pneeds(n, 2);
                    double* gx = need_x ? pgrad(n, 0).data() : nullptr;
                    double* gw = need_w ? pgrad(n, 1).data() : nullptr;
                    double* gb = need_b ? pgrad(n, 2).data() : nullptr;
                    for (std::size_t oy = 0; oy < ho; ++oy) {
                      for (std::size_t ox = 0; ox < wo; ++ox) {
                        const double* go = n.grad.data() + (oy * wo + ox) * cout;
                        if (gb != nullptr)
                          for (std::size_t co = 0; co < cout; ++co) gb[co] += go[co];
                        for (std::size_t ky = 0; ky < 3; ++ky) {
                          const long iy = static_cast<long>(oy * stride + ky) - 1;
                          if (iy < 0 || iy >= static_cast<long>(h)) continue;
                          for (std::size_t kx = 0; kx < 3; ++kx) {
                            const long ix = static_cast<long>(ox * stride + kx) - 1;
                            if (ix < 0 || ix >= static_cast<long>(wd)) continue;
                            const std::size_t in_off = (iy * wd + ix) * cin;
                            const std::size_t w_off = (ky * 3 + kx) * cin * cout;
                            for (std::size_t ci = 0; ci < cin; ++ci) {
                              const double* wr = wv.data() + w_off + ci * cout;
                              if (gx != nullptr) {
                                double s = 0.0;
                                for (std::size_t co = 0; co < cout; ++co) s += wr[co] * go[co];
                                gx[in_off + ci] += s;
                              }
                              if (gw != nullptr) {
                                const double v = xv[in_off + ci];
                                if (v == 0.0) continue;
                                double* gwr = gw + w_off + ci * cout;
                                for (std::size_t co = 0; co < cout; ++co) gwr[co] += v * go[co];
                              }
                            }
                          }
                        }
                      }
                    }
                  });
}

}  // namespace dscl
