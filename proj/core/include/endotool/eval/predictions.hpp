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
#include <span>
#include <string>
#include <vector>

#include "endotool/eval/metrics.hpp"

namespace endotool::eval {

// Prediction files share the annotation header; lines carry the frame index
// and seven confidences printed as fixed 6-decimal reals in [0,1]. One file
// per video, named <video_id>_pred.txt.

/// Serializes one video's predictions (frame indices strictly increasing).
std::string serialize_predictions(std::span<const FramePrediction> predictions);

/// Parses one video's prediction text; the inverse of serialize_predictions.
std::vector<FramePrediction> parse_predictions_text(std::string_view text,
                                                    const std::string& video_id);

/// Writes <dir>/<video_id>_pred.txt and returns the path.
std::filesystem::path write_prediction_file(
    const std::filesystem::path& dir, const std::string& video_id,
    std::span<const FramePrediction> predictions);

/// Reads a single *_pred.txt file; the video id comes from the file name.
std::vector<FramePrediction> read_prediction_file(
    const std::filesystem::path& path);

/// Reads every *_pred.txt under `dir` (sorted by name) into one pooled list.
std::vector<FramePrediction> read_prediction_dir(
    const std::filesystem::path& dir);

}  // namespace endotool::eval
