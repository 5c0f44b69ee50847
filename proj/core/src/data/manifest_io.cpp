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

#include "endotool/data/manifest_io.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "endotool/errors.hpp"

namespace endotool::data {

namespace {
using nlohmann::json;
constexpr std::string_view kManifestFormat = "endotool-manifest-v1";
}  // namespace

std::string manifest_to_json(const DatasetManifest& manifest) {
  json j;
  j["format"] = kManifestFormat;
  j["videos"] = manifest.videos;
  if (manifest.phase_count) {
    j["phase_count"] = *manifest.phase_count;
  } else {
    j["phase_count"] = nullptr;
  }
  j["sampling_fps"] = {{"num", manifest.sampling_fps.num},
                       {"den", manifest.sampling_fps.den}};
  json records = json::array();
  for (const FrameRecord& rec : manifest.records) {
    json r;
    r["video"] = rec.video_id;
    r["frame"] = rec.frame_index;
    r["tools"] = rec.tools;
    if (rec.phase) {
      r["phase"] = *rec.phase;
    } else {
      r["phase"] = nullptr;
    }
    records.push_back(std::move(r));
  }
  j["records"] = std::move(records);
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest JSON parse failure: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kManifestFormat) {
      throw FormatError("manifest format tag is \"" +
                        j.at("format").get<std::string>() + "\", expected \"" +
                        std::string(kManifestFormat) + "\"");
    }
    std::vector<FrameRecord> records;
    for (const json& r : j.at("records")) {
      FrameRecord rec;
      rec.video_id = r.at("video").get<std::string>();
      rec.frame_index = r.at("frame").get<std::int64_t>();
      const auto tools = r.at("tools").get<std::vector<int>>();
      if (tools.size() != kToolCount) {
        throw ValueError("manifest record has " + std::to_string(tools.size()) +
                         " tool bits, expected 7");
      }
      for (int t = 0; t < kToolCount; ++t) {
        const int v = tools[static_cast<std::size_t>(t)];
        if (v != 0 && v != 1) {
          throw ValueError("manifest record has non-binary tool value " +
                           std::to_string(v));
        }
        rec.tools[static_cast<std::size_t>(t)] = static_cast<std::uint8_t>(v);
      }
      if (!r.at("phase").is_null()) rec.phase = r.at("phase").get<int>();
      records.push_back(std::move(rec));
    }
    Rational fps{j.at("sampling_fps").at("num").get<std::int64_t>(),
                 j.at("sampling_fps").at("den").get<std::int64_t>()};
    // Re-assembling re-validates ordering, join and phase_count invariants.
    DatasetManifest manifest = assemble_manifest(std::move(records), {}, fps);
    const auto videos = j.at("videos").get<std::vector<std::string>>();
    for (const std::string& v : manifest.videos) {
      if (std::find(videos.begin(), videos.end(), v) == videos.end()) {
        throw FormatError("manifest record references video \"" + v +
                          "\" missing from the videos list");
      }
    }
    manifest.videos = videos;
    if (!j.at("phase_count").is_null()) {
      const int declared = j.at("phase_count").get<int>();
      if (manifest.phase_count && *manifest.phase_count > declared) {
        throw ValueError("phase label exceeds declared phase_count");
      }
      manifest.phase_count = declared;
    }
    return manifest;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest JSON field failure: ") + e.what());
  }
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << manifest_to_json(manifest);
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return manifest_from_json(text);
}

DiscoveredAnnotations discover_annotations(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("annotation directory not found: " + dir.string());
  }
  DiscoveredAnnotations found;
  std::vector<std::filesystem::path> entries;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) entries.push_back(entry.path());
  }
  std::sort(entries.begin(), entries.end());
  for (const auto& path : entries) {
    const std::string name = path.filename().string();
    constexpr std::string_view tool_suffix = "_tool.txt";
    constexpr std::string_view phase_suffix = "_phase.txt";
    if (name.size() > tool_suffix.size() && name.ends_with(tool_suffix)) {
      found.tool_files.push_back(
          {path, name.substr(0, name.size() - tool_suffix.size())});
    } else if (name.size() > phase_suffix.size() && name.ends_with(phase_suffix)) {
      found.phase_files.push_back(
          {path, name.substr(0, name.size() - phase_suffix.size())});
    }
  }
  return found;
}

}  // namespace endotool::data
