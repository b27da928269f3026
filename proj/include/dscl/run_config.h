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

#include <filesystem>
#include <string>
#include <vector>

#include "dscl/pipeline.h"
#include "dscl/synth.h"

namespace dscl {

// Settings for one run, read from `key = value` text with '#' comments.
struct RunConfig {
  TrainConfig train;
  SynthConfig synth;
  std::size_t scenes = 200;  // scenes generated per ablation manifest
  std::filesystem::path out_dir = "out";
};

const std::vector<std::string>& run_config_keys();

// Throws ConfigError naming the valid keys when `key` is unknown, and on
// values that do not parse.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
RunConfig parse_run_config(const std::string& text);
RunConfig read_run_config(const std::filesystem::path& path);
// Every key in run_config_keys() order; parse_run_config reads it back exactly.
std::string serialize_run_config(const RunConfig& cfg);

// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace dscl
