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

#include "dscl/grad_check.h"

#include <algorithm>
#include <cmath>

#include "dscl/errors.h"

namespace dscl {

GradReport finite_diff_check_with(const std::function<Var()>& loss_fn, std::vector<NamedParam> params,
                                  double eps, double tol,
                                  const std::function<void(std::vector<double>&)>& tamper) {
  if (!(eps > 0.0)) throw ContractError("finite_diff_check: eps must be positive");
  GradReport report;
  report.tolerance = tol;

  const Var loss = loss_fn();
  const GradMap grads = backward(loss);

  for (NamedParam& p : params) {
    const std::size_t n = p.var.value().size();
    std::vector<double> analytic(n, 0.0);
    if (auto it = grads.find(p.var.node()); it != grads.end()) {
      auto g = it->second.f64();
      analytic.assign(g.begin(), g.end());
    }
    if (tamper) tamper(analytic);

    ParamError err{p.name, 0.0, 0};
    auto x = p.var.mutable_value().f64();
    for (std::size_t i = 0; i < n; ++i) {
      const double saved = x[i];
      x[i] = saved + eps;
      const double up = loss_fn().item();
      x[i] = saved - eps;
      const double down = loss_fn().item();
      x[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      if (rel > err.max_rel_error || !std::isfinite(rel)) {
        err.max_rel_error = std::isfinite(rel) ? rel : INFINITY;
        err.worst_index = i;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, err.max_rel_error);
    report.params.push_back(std::move(err));
  }
  report.pass = report.max_rel_error <= tol;
  return report;
}

GradReport finite_diff_check(const std::function<Var()>& loss_fn, std::vector<NamedParam> params,
                             double eps, double tol) {
  return finite_diff_check_with(loss_fn, std::move(params), eps, tol, {});
}

}  // namespace dscl
