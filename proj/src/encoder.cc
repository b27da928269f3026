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

#include "dscl/encoder.h"


#include <cmath>

#include "dscl/errors.h"
#include "dscl/ops.h"
#include "dscl/rng.h"

namespace dscl {

std::size_t TinyEncoder::total_stride() const {
  std::size_t s = 1;
  for (const ConvStage& st : stages) s *= st.stride;
  return s;
}

std::vector<Var> TinyEncoder::parameters() const {
  std::vector<Var> out;
  for (const ConvStage& st : stages) {
    out.push_back(st.weight);
    out.push_back(st.bias);
  }
  return out;
}

TinyEncoder make_encoder(const EncoderConfig& cfg, std::uint64_t seed) {
  if (cfg.widths.empty() || cfg.widths.size() != cfg.strides.size()) {
    throw ConfigError("encoder needs one stride per stage");
  }
  Rng rng(derive_seed(seed, 0xe9c0de));
  TinyEncoder enc;
  std::size_t cin = cfg.in_channels;
  for (std::size_t s = 0; s < cfg.widths.size(); ++s) {
    const std::size_t cout = cfg.widths[s];
    if (cout == 0 || cfg.strides[s] == 0) throw ConfigError("encoder widths and strides must be positive");
    const bool relu = s + 1 < cfg.widths.size();
    const double fan_in = 9.0 * static_cast<double>(cin);
    const double bound = std::sqrt((relu ? 6.0 : 3.0) / fan_in);
    std::vector<double> w(9 * cin * cout);
    for (double& v : w) v = rng.uniform(-bound, bound);
    enc.stages.push_back(ConvStage{Var::parameter(Tensor({3, 3, cin, cout}, std::move(w))),
                                   Var::parameter(Tensor::zeros({cout})), cfg.strides[s], relu});
    cin = cout;
  }
  return enc;
}

FeatureMap encode(const TinyEncoder& enc, const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != enc.in_channels()) {
    throw ShapeError("encode: image " + shape_string(image.shape()) + " does not match encoder input depth " +
                     std::to_string(enc.in_channels()));
  }
  Var x = Var::constant(image);
  for (const ConvStage& st : enc.stages) {
    x = conv2d_3x3(x, st.weight, st.bias, st.stride);
    if (st.relu) x = relu(x);
  }
  const std::size_t h = x.dim(0), w = x.dim(1), d = x.dim(2);
  Var f = reshape(x, {h * w, d});
  return FeatureMap{f, h, w};
}

}  // namespace dscl
