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

#include "endotool/io/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include <png.h>

#include "endotool/errors.hpp"

namespace endotool::io {

Tensor read_png_rgb(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;

  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot read PNG " + path.string() + ": " + msg);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("malformed PNG " + path.string() + ": " + msg);
  }
  const int h = static_cast<int>(image.height);
  const int w = static_cast<int>(image.width);
  Tensor out = Tensor::zeros({3, h, w});
  constexpr double kScale = 1.0 / 255.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = (static_cast<std::size_t>(y) * w + x) * 3;
      out.at3(0, y, x) = buffer[p] * kScale;
      out.at3(1, y, x) = buffer[p + 1] * kScale;
      out.at3(2, y, x) = buffer[p + 2] * kScale;
    }
  }
  return out;
}

void write_png_rgb(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) < 1 ||
      image.dim(2) < 1) {
    throw ShapeError("write_png_rgb expects a (3, H, W) tensor");
  }
  const int h = image.dim(1);
  const int w = image.dim(2);
  std::vector<std::uint8_t> buffer(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = (static_cast<std::size_t>(y) * w + x) * 3;
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(image.at3(c, y, x), 0.0, 1.0);
        buffer[p + static_cast<std::size_t>(c)] =
            static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }

  png_image out;
  std::memset(&out, 0, sizeof(out));
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(w);
  out.height = static_cast<png_uint_32>(h);
  out.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&out, path.string().c_str(), 0, buffer.data(),
                               0, nullptr)) {
    const std::string msg = out.message;
    png_image_free(&out);
    throw IoError("cannot write PNG " + path.string() + ": " + msg);
  }
}

}  // namespace endotool::io
