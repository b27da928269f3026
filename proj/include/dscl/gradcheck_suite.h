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

#include <cstdint>
#include <string>
#include <vector>

#include "dscl/grad_check.h"

namespace dscl {

struct GradCheckCase {
  std::string term;  // "ce", "pgcl", "sgcl" or "total"
  GradReport report;
};

struct GradCheckSetup {
  std::size_t images = 2;
  std::size_t height = 4;
  std::size_t width = 4;
  std::size_t depth = 8;
  int classes = 3;  // labels 1..K-1 on every image, plus a background group
  double eps = 1e-5;
};

// Finite-difference check of each loss term on random leaf features and
// class weights. Clusters, pseudo labels and group classes are computed
// once from the starting point and held fixed.
std::vector<GradCheckCase> run_gradcheck(std::uint64_t seed, double tol, const GradCheckSetup& setup = {});

}  // namespace dscl
