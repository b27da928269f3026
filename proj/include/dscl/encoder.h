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
#include <vector>

#include "dscl/autograd.h"
#include "dscl/tensor.h"

namespace dscl {

// Dense embedding of one image: `values` is [(H*W) x D], pixels row-major.
struct FeatureMap {
  Var values;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t pixels() const { return height * width; }
  std::size_t depth() const { return values.dim(1); }
};

struct ConvStage {
  Var weight;  // [3, 3, Cin, Cout]
  Var bias;    // [Cout]
  std::size_t stride = 1;
  bool relu = true;
};

// Small fully convolutional encoder standing in for a pretrained backbone.
struct TinyEncoder {
  std::vector<ConvStage> stages;

  std::size_t in_channels() const { return stages.front().weight.dim(2); }
  std::size_t depth() const { return stages.back().weight.dim(3); }
  std::size_t total_stride() const;
  std::vector<Var> parameters() const;
};

struct EncoderConfig {
  std::size_t in_channels = 3;
  std::vector<std::size_t> widths{16, 32, 32};  // last entry is the output depth D
  std::vector<std::size_t> strides{2, 2, 1};
};

// Kaiming fan-in uniform weights, zero bias. ReLU after every stage but the
// last, which stays linear so embeddings can take either sign.
TinyEncoder make_encoder(const EncoderConfig& cfg, std::uint64_t seed);

// image: [H, W, Cin]. Output spatial extent is ceil(H / total_stride).
FeatureMap encode(const TinyEncoder& enc, const Tensor& image);

}  // namespace dscl
