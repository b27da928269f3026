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

#include "dscl/manifest.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "dscl/errors.h"
#include "dscl/tensor_io.h"

namespace dscl {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& s, std::size_t line) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("manifest line " + std::to_string(line) + ": bad number '" + s + "'", 0);
  }
  return v;
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text) {
  DatasetManifest m;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(body.substr(0, eq)), value = trim(body.substr(eq + 1));
      if (key == "classes") m.classes = parse_number<int>(value, line_no);
      if (key == "seed") m.seed = parse_number<std::uint64_t>(value, line_no);
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() < 3 || fields.size() > 4) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": expected 3 or 4 fields", 0);
    }
    ManifestEntry e;
    e.image_id = trim(fields[0]);
    e.image_path = trim(fields[1]);
    if (e.image_id.empty() || e.image_path.empty()) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": empty id or path", 0);
    }
    if (!seen.insert(e.image_id).second) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": duplicate id " + e.image_id, 0);
    }
    for (const std::string& tok : split(fields[2], ';')) e.labels.push_back(parse_number<int>(trim(tok), line_no));
    std::sort(e.labels.begin(), e.labels.end());
    e.labels.erase(std::unique(e.labels.begin(), e.labels.end()), e.labels.end());
    if (fields.size() == 4 && !trim(fields[3]).empty()) e.gt_mask_path = trim(fields[3]);
    m.entries.push_back(std::move(e));
  }
  if (m.classes < 2) throw FormatError("manifest must declare '# classes=K' with K >= 2", 0);
  for (const ManifestEntry& e : m.entries) {
    for (int k : e.labels) {
      if (k < 1 || k >= m.classes) {
        throw FormatError("manifest entry " + e.image_id + ": class id " + std::to_string(k) + " out of range", 0);
      }
    }
  }
  return m;
}

std::string serialize_manifest(const DatasetManifest& m) {
  std::ostringstream out;
  out << "# classes=" << m.classes << "\n";
  out << "# seed=" << m.seed << "\n";
  for (const ManifestEntry& e : m.entries) {
    out << e.image_id << "," << e.image_path << ",";
    for (std::size_t i = 0; i < e.labels.size(); ++i) out << (i ? ";" : "") << e.labels[i];
    if (e.gt_mask_path) out << "," << *e.gt_mask_path;
    out << "\n";
  }
  return out.str();
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << serialize_manifest(m);
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  const std::filesystem::path dir = manifest_path.parent_path();
  Dataset ds;
  ds.classes = m.classes;
  for (const ManifestEntry& e : m.entries) {
    Scene s;
    s.image = read_tensor(dir / e.image_path).as_float64();
    if (s.image.rank() != 3) throw FormatError("image " + e.image_path + " is not [H, W, C]", 5);
    s.labels = e.labels;
    if (e.gt_mask_path) {
      s.gt_mask = read_tensor(dir / *e.gt_mask_path);
      if (s.gt_mask.dtype() != DType::kUInt16) throw FormatError("mask " + *e.gt_mask_path + " is not uint16", 4);
    } else {
      s.gt_mask = Tensor::zeros({s.image.dim(0), s.image.dim(1)}, DType::kUInt16);
    }
    ds.ids.push_back(e.image_id);
    ds.scenes.push_back(std::move(s));
  }
  return ds;
}

DatasetManifest save_dataset(const std::filesystem::path& dir, const std::vector<Scene>& scenes, int classes,
                             std::uint64_t seed) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  DatasetManifest m;
  m.classes = classes;
  m.seed = seed;
  const int width = static_cast<int>(std::to_string(scenes.empty() ? 0 : scenes.size() - 1).size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    std::string id = std::to_string(i);
    id = "scene" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(id.size()))), '0') + id;
    ManifestEntry e{id, "images/" + id + ".dst", scenes[i].labels, "masks/" + id + ".dst"};
    write_tensor(dir / e.image_path, scenes[i].image);
    write_tensor(dir / *e.gt_mask_path, scenes[i].gt_mask);
    m.entries.push_back(std::move(e));
  }
  write_manifest(dir / "manifest.csv", m);
  return m;
}

}  // namespace dscl
