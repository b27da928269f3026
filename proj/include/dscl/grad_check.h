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

#include <functional>
#include <string>
#include <vector>

#include "dscl/autograd.h"

namespace dscl {

struct ParamError {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradReport {
  std::vector<ParamError> params;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct NamedParam {
  std::string name;
  Var var;
};

// Central-difference check of backward() against `loss_fn`, which must
// rebuild the graph from the current parameter values on every call.
// Relative error is |a - n| / max(|a|, |n|, 1e-8); pass iff the maximum over
// all checked elements is <= tol.
GradReport finite_diff_check(const std::function<Var()>& loss_fn, std::vector<NamedParam> params,
                             double eps = 1e-5, double tol = 1e-4);

// Overrides the analytic gradient with `tamper` before comparing. Lets tests
// confirm the checker actually rejects a wrong gradient.
GradReport finite_diff_check_with(const std::function<Var()>& loss_fn, std::vector<NamedParam> params,
                                  double eps, double tol,
                                  const std::function<void(std::vector<double>&)>& tamper);

}  // namespace dscl
