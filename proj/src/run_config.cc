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

#include "dscl/run_config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dscl/errors.h"

namespace dscl {

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys{
      "alpha",  "beta",   "tau",     "theta", "lr",    "clip",  "steps",  "batch",           "seed",
      "mode",   "width",  "height",  "classes", "depth", "background_group",
      "include_positive_in_denominator", "out_dir", "scenes", "eval_every", "threads"};
  return keys;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(key + ": '" + v + "' is not a number");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": '" + v + "' is not a non-negative integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

std::string valid_keys() {
  std::string s;
  for (const auto& k : run_config_keys()) s += (s.empty() ? "" : ", ") + k;
  return s;
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  TrainConfig& t = cfg.train;
  if (key == "alpha") t.alpha = to_double(key, value);
  else if (key == "beta") t.beta = to_double(key, value);
  else if (key == "tau") t.tau = to_double(key, value);
  else if (key == "theta") t.theta = to_double(key, value);
  else if (key == "lr") t.lr = to_double(key, value);
  else if (key == "clip") t.clip = to_double(key, value);
  else if (key == "steps") t.steps = to_u64(key, value);
  else if (key == "batch") t.batch = to_u64(key, value);
  else if (key == "seed") t.seed = to_u64(key, value);
  else if (key == "mode") t.mode = parse_mode(value);
  else if (key == "width") cfg.synth.width = to_u64(key, value);
  else if (key == "height") cfg.synth.height = to_u64(key, value);
  else if (key == "classes") cfg.synth.classes = static_cast<int>(to_u64(key, value));
  else if (key == "depth") t.depth = to_u64(key, value);
  else if (key == "background_group") t.background_group = to_bool(key, value);
  else if (key == "include_positive_in_denominator") t.include_positive = to_bool(key, value);
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "scenes") cfg.scenes = to_u64(key, value);
  else if (key == "eval_every") t.eval_every = to_u64(key, value);
  else if (key == "threads") t.threads = to_u64(key, value);
  else throw ConfigError("unknown key '" + key + "'; valid keys: " + valid_keys());
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string serialize_run_config(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  std::ostringstream out;
  out << "alpha = " << format_double(t.alpha) << "\n"
      << "beta = " << format_double(t.beta) << "\n"
      << "tau = " << format_double(t.tau) << "\n"
      << "theta = " << format_double(t.theta) << "\n"
      << "lr = " << format_double(t.lr) << "\n"
      << "clip = " << format_double(t.clip) << "\n"
      << "steps = " << t.steps << "\n"
      << "batch = " << t.batch << "\n"
      << "seed = " << t.seed << "\n"
      << "mode = " << mode_name(t.mode) << "\n"
      << "width = " << cfg.synth.width << "\n"
      << "height = " << cfg.synth.height << "\n"
      << "classes = " << cfg.synth.classes << "\n"
      << "depth = " << t.depth << "\n"
      << "background_group = " << (t.background_group ? "true" : "false") << "\n"
      << "include_positive_in_denominator = " << (t.include_positive ? "true" : "false") << "\n"
      << "out_dir = " << cfg.out_dir.string() << "\n"
      << "scenes = " << cfg.scenes << "\n"
      << "eval_every = " << t.eval_every << "\n"
      << "threads = " << t.threads << "\n";
  return out.str();
}

}  // namespace dscl
