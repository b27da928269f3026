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

#include "dscl/checkpoint.h"

#include <map>
#include <sstream>

#include "dscl/errors.h"
#include "dscl/tensor_io.h"

namespace dscl {

namespace {

void append_name(std::vector<std::uint8_t>& out, const std::string& name) {
  append_u64(out, name.size());
  out.insert(out.end(), name.begin(), name.end());
}

void append_tensor(std::vector<std::uint8_t>& out, const std::string& name, const Tensor& t) {
  append_name(out, name);
  const auto blob = encode_tensor(t);
  out.insert(out.end(), blob.begin(), blob.end());
}

std::uint64_t read_len(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (pos + 8 > bytes.size()) throw FormatError("checkpoint: truncated length field", pos);
  const std::uint64_t n = load_u64(bytes, pos);
  pos += 8;
  if (n > bytes.size() - pos) throw FormatError("checkpoint: length runs past the end", pos - 8);
  return n;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelState& state, const RunConfig& config) {
  std::vector<std::uint8_t> out;
  const auto params = state.parameters();
  if (state.momentum.size() != params.size()) throw ContractError("checkpoint: momentum does not match parameters");
  for (const NamedParam& p : params) append_tensor(out, p.name, p.var.value());
  for (std::size_t i = 0; i < params.size(); ++i) append_tensor(out, "momentum/" + params[i].name, state.momentum[i]);
  append_u64(out, 0);

  std::ostringstream meta;
  meta << "step = " << state.step << "\n";
  meta << "strides = ";
  for (std::size_t i = 0; i < state.encoder.stages.size(); ++i) {
    meta << (i ? "," : "") << state.encoder.stages[i].stride;
  }
  meta << "\n";
  RunConfig echo = config;
  echo.train.seed = state.seed;
  meta << serialize_run_config(echo);
  const std::string text = meta.str();
  append_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  std::map<std::string, Tensor> tensors;
  std::vector<std::string> order;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t at = pos;
    const std::uint64_t n = read_len(bytes, pos);
    if (n == 0) break;
    std::string name(bytes.begin() + pos, bytes.begin() + pos + n);
    pos += n;
    if (tensors.count(name)) throw FormatError("checkpoint: duplicate tensor '" + name + "'", at);
    tensors.emplace(name, decode_tensor(bytes, &pos));
    order.push_back(name);
  }
  const std::uint64_t meta_len = read_len(bytes, pos);
  const std::string meta(bytes.begin() + pos, bytes.begin() + pos + meta_len);
  pos += meta_len;
  if (pos != bytes.size()) throw FormatError("checkpoint: trailing bytes", pos);

  Checkpoint cp;
  std::size_t step = 0;
  std::vector<std::size_t> strides;
  std::string cfg_text;
  {
    std::istringstream in(meta);
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("step = ", 0) == 0) {
        step = std::stoull(line.substr(7));
      } else if (line.rfind("strides = ", 0) == 0) {
        std::istringstream s(line.substr(10));
        std::string tok;
        while (std::getline(s, tok, ',')) strides.push_back(std::stoull(tok));
      } else {
        cfg_text += line + "\n";
      }
    }
  }
  cp.config = parse_run_config(cfg_text);

  auto take = [&](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw FormatError("checkpoint: missing tensor '" + name + "'", bytes.size());
    if (it->second.dtype() != DType::kFloat64) throw FormatError("checkpoint: '" + name + "' is not float64", 0);
    return it->second;
  };
  ModelState& s = cp.state;
  for (std::size_t i = 0; i < strides.size(); ++i) {
    ConvStage st;
    st.weight = Var::parameter(take("encoder." + std::to_string(i) + ".weight"));
    st.bias = Var::parameter(take("encoder." + std::to_string(i) + ".bias"));
    st.stride = strides[i];
    st.relu = i + 1 < strides.size();
    s.encoder.stages.push_back(st);
  }
  if (s.encoder.stages.empty()) throw FormatError("checkpoint: no encoder stages", 0);
  s.cam.base = Var::parameter(take("cam.base"));
  s.cam.refined = Var::parameter(take("cam.refined"));
  for (const NamedParam& p : s.parameters()) {
    Tensor m = take("momentum/" + p.name);
    if (m.shape() != p.var.shape()) throw FormatError("checkpoint: momentum shape for '" + p.name + "'", 0);
    s.momentum.push_back(std::move(m));
  }
  s.step = step;
  s.seed = cp.config.train.seed;
  return cp;
}

void save_checkpoint(const std::filesystem::path& path, const ModelState& state, const RunConfig& config) {
  write_file_bytes(path, encode_checkpoint(state, config));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file_bytes(path)); }

}  // namespace dscl
