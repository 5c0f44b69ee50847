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

#include "endotool/data/annotations.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "endotool/errors.hpp"

namespace endotool::data {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// Splits on LF. Tolerates a missing final newline; rejects CR anywhere.
std::vector<std::string_view> split_lines(std::string_view text,
                                          const std::string& where) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find('\n', start);
    std::string_view line = (pos == std::string_view::npos)
                                ? text.substr(start)
                                : text.substr(start, pos - start);
    if (pos == std::string_view::npos && line.empty()) break;
    if (line.find('\r') != std::string_view::npos) {
      throw FormatError(where + " line " + std::to_string(lines.size() + 1) +
                        ": carriage return found; LF line endings required");
    }
    lines.push_back(line);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return lines;
}

void check_header(std::string_view got, std::string_view expected,
                  const std::string& where) {
  if (got == expected) return;
  const auto got_tokens = split_tabs(got);
  const auto want_tokens = split_tabs(expected);
  const std::size_t n = std::min(got_tokens.size(), want_tokens.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (got_tokens[i] != want_tokens[i]) {
      throw FormatError(where + ": header column " + std::to_string(i + 1) +
                        " is \"" + std::string(got_tokens[i]) +
                        "\", expected \"" + std::string(want_tokens[i]) + "\"");
    }
  }
  throw FormatError(where + ": header has " + std::to_string(got_tokens.size()) +
                    " columns, expected " + std::to_string(want_tokens.size()));
}

std::optional<std::int64_t> parse_nonneg_int(std::string_view token) {
  if (token.empty() || token.size() > 18) return std::nullopt;
  std::int64_t v = 0;
  for (char c : token) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace

std::string_view tool_name(int index) {
  if (index < 0 || index >= kToolCount) {
    throw LookupError("tool index out of range: " + std::to_string(index));
  }
  return kToolNames[static_cast<std::size_t>(index)];
}

std::optional<int> tool_index(std::string_view name) {
  for (int i = 0; i < kToolCount; ++i) {
    if (kToolNames[static_cast<std::size_t>(i)] == name) return i;
  }
  return std::nullopt;
}

std::vector<FrameRecord> parse_annotation_text(std::string_view text,
                                               const std::string& video_id) {
  const std::string where = "annotation \"" + video_id + "\"";
  const auto lines = split_lines(text, where);
  if (lines.empty()) throw FormatError(where + ": empty file, header required");
  check_header(lines[0], kAnnotationHeader, where);

  std::vector<FrameRecord> records;
  records.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string at = where + " line " + std::to_string(li + 1);
    if (lines[li].empty()) throw FormatError(at + ": empty line");
    const auto fields = split_tabs(lines[li]);
    if (fields.size() != 1 + kToolCount) {
      throw FormatError(at + ": expected " + std::to_string(1 + kToolCount) +
                        " tab-separated fields, got " + std::to_string(fields.size()));
    }
    FrameRecord rec;
    rec.video_id = video_id;
    const auto frame = parse_nonneg_int(fields[0]);
    if (!frame) {
      throw ValueError(at + ": invalid frame_index \"" + std::string(fields[0]) + "\"");
    }
    rec.frame_index = *frame;
    if (!records.empty() && rec.frame_index <= records.back().frame_index) {
      throw OrderingError(at + ": frame_index " + std::to_string(rec.frame_index) +
                          " not greater than previous " +
                          std::to_string(records.back().frame_index));
    }
    for (int t = 0; t < kToolCount; ++t) {
      const std::string_view tok = fields[static_cast<std::size_t>(t) + 1];
      if (tok == "0") {
        rec.tools[static_cast<std::size_t>(t)] = 0;
      } else if (tok == "1") {
        rec.tools[static_cast<std::size_t>(t)] = 1;
      } else {
        throw ValueError(at + ": tool column " + std::string(tool_name(t)) +
                         " has non-binary value \"" + std::string(tok) + "\"");
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<FrameRecord> parse_annotation_file(const std::filesystem::path& path,
                                               const std::string& video_id) {
  return parse_annotation_text(read_file(path), video_id);
}

std::vector<PhaseEntry> parse_phase_text(std::string_view text,
                                         const std::string& video_id) {
  const std::string where = "phase \"" + video_id + "\"";
  const auto lines = split_lines(text, where);
  if (lines.empty()) throw FormatError(where + ": empty file, header required");
  check_header(lines[0], kPhaseHeader, where);

  std::vector<PhaseEntry> entries;
  entries.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string at = where + " line " + std::to_string(li + 1);
    if (lines[li].empty()) throw FormatError(at + ": empty line");
    const auto fields = split_tabs(lines[li]);
    if (fields.size() != 2) {
      throw FormatError(at + ": expected 2 tab-separated fields, got " +
                        std::to_string(fields.size()));
    }
    const auto frame = parse_nonneg_int(fields[0]);
    if (!frame) {
      throw ValueError(at + ": invalid frame_index \"" + std::string(fields[0]) + "\"");
    }
    const auto phase = parse_nonneg_int(fields[1]);
    if (!phase) {
      throw ValueError(at + ": invalid phase label \"" + std::string(fields[1]) + "\"");
    }
    if (!entries.empty() && *frame <= entries.back().frame_index) {
      throw OrderingError(at + ": frame_index " + std::to_string(*frame) +
                          " not greater than previous " +
                          std::to_string(entries.back().frame_index));
    }
    entries.push_back(PhaseEntry{video_id, *frame, static_cast<int>(*phase)});
  }
  return entries;
}

std::vector<PhaseEntry> parse_phase_file(const std::filesystem::path& path,
                                         const std::string& video_id) {
  return parse_phase_text(read_file(path), video_id);
}

std::string serialize_annotations(std::span<const FrameRecord> records) {
  std::string out;
  out.reserve(records.size() * 24 + kAnnotationHeader.size() + 1);
  out += kAnnotationHeader;
  out += '\n';
  for (const FrameRecord& rec : records) {
    out += std::to_string(rec.frame_index);
    for (int t = 0; t < kToolCount; ++t) {
      out += '\t';
      out += rec.tools[static_cast<std::size_t>(t)] ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

std::string serialize_phases(std::span<const FrameRecord> records) {
  std::string out;
  out += kPhaseHeader;
  out += '\n';
  for (const FrameRecord& rec : records) {
    if (!rec.phase) continue;
    out += std::to_string(rec.frame_index);
    out += '\t';
    out += std::to_string(*rec.phase);
    out += '\n';
  }
  return out;
}

DatasetManifest assemble_manifest(std::vector<FrameRecord> records,
                                  const std::vector<PhaseEntry>& phases,
                                  Rational sampling_fps) {
  if (sampling_fps.num <= 0 || sampling_fps.den <= 0) {
    throw ConfigError("sampling_fps must be positive");
  }

  DatasetManifest manifest;
  manifest.sampling_fps = sampling_fps;

  // Video order is first-appearance order; per-video indices must already be
  // strictly increasing.
  std::unordered_map<std::string, std::int64_t> last_index;
  std::unordered_map<std::string, std::unordered_map<std::int64_t, std::size_t>> by_key;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const FrameRecord& rec = records[i];
    auto it = last_index.find(rec.video_id);
    if (it == last_index.end()) {
      manifest.videos.push_back(rec.video_id);
      last_index.emplace(rec.video_id, rec.frame_index);
    } else {
      if (rec.frame_index <= it->second) {
        throw OrderingError("video \"" + rec.video_id + "\": frame_index " +
                            std::to_string(rec.frame_index) +
                            " not greater than previous " + std::to_string(it->second));
      }
      it->second = rec.frame_index;
    }
    by_key[rec.video_id][rec.frame_index] = i;
  }

  for (const PhaseEntry& entry : phases) {
    auto vit = by_key.find(entry.video_id);
    if (vit == by_key.end() || !vit->second.contains(entry.frame_index)) {
      throw JoinError("phase entry (video \"" + entry.video_id + "\", frame " +
                      std::to_string(entry.frame_index) +
                      ") has no matching tool record");
    }
    records[vit->second[entry.frame_index]].phase = entry.phase;
  }

  int max_phase = -1;
  for (const FrameRecord& rec : records) {
    if (rec.phase) {
      if (*rec.phase < 0) throw ValueError("negative phase label");
      max_phase = std::max(max_phase, *rec.phase);
    }
  }
  if (max_phase >= 0) manifest.phase_count = max_phase + 1;

  manifest.records = std::move(records);
  return manifest;
}

DatasetManifest build_manifest(const std::vector<AnnotationSource>& tool_files,
                               const std::vector<AnnotationSource>& phase_files,
                               Rational sampling_fps) {
  std::unordered_set<std::string> seen;
  for (const AnnotationSource& src : tool_files) {
    if (!seen.insert(src.video_id).second) {
      throw ConfigError("duplicate video_id \"" + src.video_id + "\"");
    }
  }
  std::unordered_set<std::string> seen_phase;
  for (const AnnotationSource& src : phase_files) {
    if (!seen_phase.insert(src.video_id).second) {
      throw ConfigError("duplicate video_id \"" + src.video_id + "\" in phase files");
    }
  }

  std::vector<FrameRecord> records;
  for (const AnnotationSource& src : tool_files) {
    auto recs = parse_annotation_file(src.path, src.video_id);
    records.insert(records.end(), std::make_move_iterator(recs.begin()),
                   std::make_move_iterator(recs.end()));
  }
  std::vector<PhaseEntry> phases;
  for (const AnnotationSource& src : phase_files) {
    auto entries = parse_phase_file(src.path, src.video_id);
    phases.insert(phases.end(), entries.begin(), entries.end());
  }
  return assemble_manifest(std::move(records), phases, sampling_fps);
}

ClassFrequency class_frequency(const DatasetManifest& manifest) {
  if (manifest.records.empty()) {
    throw EmptyInputError("class_frequency: manifest has no records");
  }
  ClassFrequency freq;
  freq.total_records = static_cast<std::int64_t>(manifest.records.size());
  for (const FrameRecord& rec : manifest.records) {
    for (int t = 0; t < kToolCount; ++t) {
      freq.per_tool[static_cast<std::size_t>(t)].positives +=
          rec.tools[static_cast<std::size_t>(t)];
    }
  }
  for (auto& tool : freq.per_tool) {
    tool.fraction = static_cast<double>(tool.positives) /
                    static_cast<double>(freq.total_records);
  }
  return freq;
}

std::pair<DatasetManifest, DatasetManifest> split_manifest(
    const DatasetManifest& manifest,
    const std::unordered_set<std::string>& train_videos,
    const std::unordered_set<std::string>& test_videos) {
  for (const std::string& v : train_videos) {
    if (test_videos.contains(v)) {
      throw ConfigError("video \"" + v + "\" appears in both splits");
    }
  }
  const std::unordered_set<std::string> known(manifest.videos.begin(),
                                              manifest.videos.end());
  for (const auto* set : {&train_videos, &test_videos}) {
    for (const std::string& v : *set) {
      if (!known.contains(v)) throw LookupError("unknown video id \"" + v + "\"");
    }
  }
  // Every manifest video must land in exactly one side.
  for (const std::string& v : manifest.videos) {
    if (!train_videos.contains(v) && !test_videos.contains(v)) {
      throw ConfigError("video \"" + v + "\" not assigned to either split");
    }
  }

  auto subset = [&](const std::unordered_set<std::string>& keep) {
    DatasetManifest out;
    out.sampling_fps = manifest.sampling_fps;
    out.phase_count = manifest.phase_count;
    for (const std::string& v : manifest.videos) {
      if (keep.contains(v)) out.videos.push_back(v);
    }
    for (const FrameRecord& rec : manifest.records) {
      if (keep.contains(rec.video_id)) out.records.push_back(rec);
    }
    return out;
  };
  return {subset(train_videos), subset(test_videos)};
}

std::vector<FrameRecord> records_for_video(const DatasetManifest& manifest,
                                           const std::string& video_id) {
  std::vector<FrameRecord> out;
  for (const FrameRecord& rec : manifest.records) {
    if (rec.video_id == video_id) out.push_back(rec);
  }
  return out;
}

}  // namespace endotool::data
