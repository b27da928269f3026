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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dscl/synth.h"

namespace dscl {

struct ManifestEntry {
  std::string image_id;
  std::string image_path;  // relative to the manifest directory
  std::vector<int> labels;
  std::optional<std::string> gt_mask_path;

  bool operator==(const ManifestEntry&) const = default;
};

// Text format, one image per line:
//   imageId,featureOrImagePath,classId[;classId...][,gtMaskPath]
// Leading "# classes=K" and "# seed=S" lines carry the class count and seed;
// any other '#' line is a comment.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  int classes = 0;
  std::uint64_t seed = 0;

  bool operator==(const DatasetManifest&) const = default;
};

DatasetManifest parse_manifest(const std::string& text);
std::string serialize_manifest(const DatasetManifest& m);

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);

struct Dataset {
  std::vector<std::string> ids;
  std::vector<Scene> scenes;
  int classes = 0;
};

// Reads every image (and mask, when listed) referenced by the manifest.
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Writes scenes as DST1 files under `dir` (images/, masks/) plus manifest.csv.
DatasetManifest save_dataset(const std::filesystem::path& dir, const std::vector<Scene>& scenes, int classes,
                             std::uint64_t seed);

}  // namespace dscl
