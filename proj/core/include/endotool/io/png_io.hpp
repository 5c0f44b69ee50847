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

#include "endotool/tensor.hpp"

namespace endotool::io {

/// Reads an 8-bit PNG as a (3, H, W) tensor with values in [0, 1].
/// Grayscale and alpha inputs are converted to plain RGB.
Tensor read_png_rgb(const std::filesystem::path& path);

/// Writes a (3, H, W) tensor as an 8-bit RGB PNG. Values are clamped to
/// [0, 1] and rounded to the nearest of the 256 levels.
void write_png_rgb(const std::filesystem::path& path, const Tensor& image);

}  // namespace endotool::io
