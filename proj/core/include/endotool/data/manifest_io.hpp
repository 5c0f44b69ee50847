// Copyright 2026 The Endotool Authors
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

#include "endotool/data/annotations.hpp"

namespace endotool::data {

/// JSON manifest file written by `endotool ingest` and consumed by the
/// training/prediction commands.
std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text);

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Scan a directory for `<video>_tool.txt` / `<video>_phase.txt` pairs.
struct DiscoveredAnnotations {
  std::vector<AnnotationSource> tool_files;
  std::vector<AnnotationSource> phase_files;
};
DiscoveredAnnotations discover_annotations(const std::filesystem::path& dir);

}  // namespace endotool::data
