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

#include "endotool/eval/predictions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "endotool/errors.hpp"

namespace endotool::eval {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out.good()) throw IoError("failed writing: " + path.string());
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

std::optional<std::int64_t> parse_nonneg_int(std::string_view token) {
  if (token.empty() || token.size() > 18) return std::nullopt;
  std::int64_t v = 0;
  for (char c : token) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

std::optional<double> parse_confidence(std::string_view token) {
  double v = 0.0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  if (!(v >= 0.0) || !(v <= 1.0)) return std::nullopt;
  return v;
}

}  // namespace

std::string serialize_predictions(std::span<const FramePrediction> predictions) {
  std::string out{data::kAnnotationHeader};
  out += '\n';
  char buf[32];
  std::int64_t prev_frame = -1;
  for (const FramePrediction& p : predictions) {
    if (p.frame_index < 0) {
      throw ValueError("prediction frame index must be non-negative, got " +
                       std::to_string(p.frame_index));
    }
    if (p.frame_index <= prev_frame) {
      throw OrderingError("prediction frame indices must increase strictly: " +
                          std::to_string(p.frame_index) + " after " +
                          std::to_string(prev_frame));
    }
    prev_frame = p.frame_index;
    out += std::to_string(p.frame_index);
    for (double c : p.confidences) {
      if (!std::isfinite(c) || c < 0.0 || c > 1.0) {
        throw ValueError("confidence " + std::to_string(c) +
                         " is outside [0, 1] at frame " +
                         std::to_string(p.frame_index));
      }
      std::snprintf(buf, sizeof(buf), "\t%.6f", c);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::vector<FramePrediction> parse_predictions_text(std::string_view text,
                                                    const std::string& video_id) {
  const std::string where = "predictions \"" + video_id + "\"";
  const auto lines = split_lines(text, where);
  if (lines.empty()) {
    throw FormatError(where + ": empty file, expected the header line");
  }
  if (lines[0] != data::kAnnotationHeader) {
    const auto got = split_tabs(lines[0]);
    const auto want = split_tabs(data::kAnnotationHeader);
    const std::size_t n = std::min(got.size(), want.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (got[i] != want[i]) {
        throw FormatError(where + ": header column " + std::to_string(i + 1) +
                          " is \"" + std::string(got[i]) + "\", expected \"" +
                          std::string(want[i]) + "\"");
      }
    }
    throw FormatError(where + ": header has " + std::to_string(got.size()) +
                      " columns, expected " + std::to_string(want.size()));
  }

  std::vector<FramePrediction> out;
  std::int64_t prev_frame = -1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string at = where + " line " + std::to_string(i + 1);
    const auto tokens = split_tabs(lines[i]);
    if (tokens.size() != 1 + static_cast<std::size_t>(data::kToolCount)) {
      throw FormatError(at + ": has " + std::to_string(tokens.size()) +
                        " columns, expected 8");
    }
    const auto frame = parse_nonneg_int(tokens[0]);
    if (!frame.has_value()) {
      throw ValueError(at + ": frame index \"" + std::string(tokens[0]) +
                       "\" is not a non-negative integer");
    }
    if (*frame <= prev_frame) {
      throw OrderingError(at + ": frame index " + std::to_string(*frame) +
                          " does not increase (previous " +
                          std::to_string(prev_frame) + ")");
    }
    prev_frame = *frame;
    FramePrediction p;
    p.video_id = video_id;
    p.frame_index = *frame;
    for (int t = 0; t < data::kToolCount; ++t) {
      const auto c = parse_confidence(tokens[static_cast<std::size_t>(t) + 1]);
      if (!c.has_value()) {
        throw ValueError(at + ": column " + std::string(data::tool_name(t)) +
                         " value \"" +
                         std::string(tokens[static_cast<std::size_t>(t) + 1]) +
                         "\" is not a confidence in [0, 1]");
      }
      p.confidences[static_cast<std::size_t>(t)] = *c;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::filesystem::path write_prediction_file(
    const std::filesystem::path& dir, const std::string& video_id,
    std::span<const FramePrediction> predictions) {
  const std::filesystem::path path = dir / (video_id + "_pred.txt");
  write_file(path, serialize_predictions(predictions));
  return path;
}

std::vector<FramePrediction> read_prediction_file(
    const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  constexpr std::string_view kSuffix = "_pred.txt";
  if (name.size() <= kSuffix.size() ||
      name.substr(name.size() - kSuffix.size()) != kSuffix) {
    throw FormatError("prediction file must be named <video_id>_pred.txt: " +
                      path.string());
  }
  const std::string video_id = name.substr(0, name.size() - kSuffix.size());
  return parse_predictions_text(read_file(path), video_id);
}

std::vector<FramePrediction> read_prediction_dir(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    constexpr std::string_view kSuffix = "_pred.txt";
    if (name.size() > kSuffix.size() &&
        name.substr(name.size() - kSuffix.size()) == kSuffix) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw IoError("no *_pred.txt files under " + dir.string());
  }
  std::vector<FramePrediction> pooled;
  for (const auto& f : files) {
    auto preds = read_prediction_file(f);
    pooled.insert(pooled.end(), std::make_move_iterator(preds.begin()),
                  std::make_move_iterator(preds.end()));
  }
  return pooled;
}

}  // namespace endotool::eval
