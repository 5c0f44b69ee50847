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
#include <map>
#include <string>
#include <utility>

#include "endotool/tensor.hpp"

namespace endotool::io {

/// Supplies frame images as (3, H, W) tensors keyed by (video, frame index).
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual Tensor load(const std::string& video_id, long frame_index) const = 0;
};

/// Canonical on-disk location of a frame image under a dataset root:
/// <root>/images/<video_id>/frame_<0-padded 7-digit index>.png
std::filesystem::path frame_image_path(const std::filesystem::path& root,
                                       const std::string& video_id,
                                       long frame_index);

class DirectoryFrameSource final : public FrameSource {
 public:
  explicit DirectoryFrameSource(std::filesystem::path root)
      : root_(std::move(root)) {}

  Tensor load(const std::string& video_id, long frame_index) const override;

 private:
  std::filesystem::path root_;
};

/// Frames held in memory; used by tests and gradient checks.
class InMemoryFrameSource final : public FrameSource {
 public:
  void add(const std::string& video_id, long frame_index, Tensor image);
  Tensor load(const std::string& video_id, long frame_index) const override;

 private:
  std::map<std::pair<std::string, long>, Tensor> frames_;
};

}  // namespace endotool::io
