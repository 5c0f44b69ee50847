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

#include "endotool/io/frame_source.hpp"

#include <cstdio>

#include "endotool/errors.hpp"
#include "endotool/io/png_io.hpp"

namespace endotool::io {

std::filesystem::path frame_image_path(const std::filesystem::path& root,
                                       const std::string& video_id,
                                       long frame_index) {
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%07ld.png", frame_index);
  return root / "images" / video_id / name;
}

Tensor DirectoryFrameSource::load(const std::string& video_id,
                                  long frame_index) const {
  return read_png_rgb(frame_image_path(root_, video_id, frame_index));
}

void InMemoryFrameSource::add(const std::string& video_id, long frame_index,
                              Tensor image) {
  frames_[{video_id, frame_index}] = std::move(image);
}

Tensor InMemoryFrameSource::load(const std::string& video_id,
                                 long frame_index) const {
  const auto it = frames_.find({video_id, frame_index});
  if (it == frames_.end()) {
    throw LookupError("no frame " + std::to_string(frame_index) +
                      " for video \"" + video_id + "\"");
  }
  return it->second;
}

}  // namespace endotool::io
