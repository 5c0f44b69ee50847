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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace endotool::data {

// Canonical tool order. Fixed everywhere: annotation columns, confidence
// vectors, report rows.
inline constexpr int kToolCount = 7;
inline constexpr std::array<std::string_view, kToolCount> kToolNames = {
    "Grasper", "Bipolar", "Hook", "Scissors", "Clipper", "Irrigator", "SpecimenBag"};

std::string_view tool_name(int index);
std::optional<int> tool_index(std::string_view name);

// Exact first line of a tool annotation or prediction file.
inline constexpr std::string_view kAnnotationHeader =
    "Frame\tGrasper\tBipolar\tHook\tScissors\tClipper\tIrrigator\tSpecimenBag";
inline constexpr std::string_view kPhaseHeader = "Frame\tPhase";

using ToolBits = std::array<std::uint8_t, kToolCount>;

/// One annotated video frame.
struct FrameRecord {
  std::string video_id;
  std::int64_t frame_index = 0;
  ToolBits tools{};
  std::optional<int> phase;

  bool operator==(const FrameRecord&) const = default;
};

struct Rational {
  std::int64_t num = 1;
  std::int64_t den = 1;
  bool operator==(const Rational&) const = default;
};

struct DatasetManifest {
  std::vector<FrameRecord> records;
  std::vector<std::string> videos;
  std::optional<int> phase_count;
  Rational sampling_fps{1, 1};

  bool operator==(const DatasetManifest&) const = default;
};

struct ToolFrequency {
  std::int64_t positives = 0;
  double fraction = 0.0;
};

struct ClassFrequency {
  std::array<ToolFrequency, kToolCount> per_tool{};
  std::int64_t total_records = 0;
};

struct PhaseEntry {
  std::string video_id;
  std::int64_t frame_index = 0;
  int phase = 0;
};

struct AnnotationSource {
  std::filesystem::path path;
  std::string video_id;
};

// ---- Parsing / serialization (formats are bit-exact, LF endings) ----

std::vector<FrameRecord> parse_annotation_text(std::string_view text,
                                               const std::string& video_id);
std::vector<FrameRecord> parse_annotation_file(const std::filesystem::path& path,
                                               const std::string& video_id);

std::vector<PhaseEntry> parse_phase_text(std::string_view text,
                                         const std::string& video_id);
std::vector<PhaseEntry> parse_phase_file(const std::filesystem::path& path,
                                         const std::string& video_id);

/// Header plus one line per record; re-parsing yields the same records.
std::string serialize_annotations(std::span<const FrameRecord> records);

/// Phase lines for the records that carry a phase label.
std::string serialize_phases(std::span<const FrameRecord> records);

// ---- Manifest assembly ----

/// Join already-parsed records with phase entries, infer phase_count, and
/// validate the manifest invariants. Records must arrive grouped by video in
/// the intended video order.
DatasetManifest assemble_manifest(std::vector<FrameRecord> records,
                                  const std::vector<PhaseEntry>& phases,
                                  Rational sampling_fps = {1, 1});

DatasetManifest build_manifest(const std::vector<AnnotationSource>& tool_files,
                               const std::vector<AnnotationSource>& phase_files = {},
                               Rational sampling_fps = {1, 1});

ClassFrequency class_frequency(const DatasetManifest& manifest);

std::pair<DatasetManifest, DatasetManifest> split_manifest(
    const DatasetManifest& manifest,
    const std::unordered_set<std::string>& train_videos,
    const std::unordered_set<std::string>& test_videos);

/// Records of one video, in manifest order.
std::vector<FrameRecord> records_for_video(const DatasetManifest& manifest,
                                           const std::string& video_id);

}  // namespace endotool::data
