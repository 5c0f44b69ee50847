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

#include "endotool/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "endotool/errors.hpp"

namespace endotool {

std::int64_t shape_volume(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative tensor dimension " + std::to_string(d));
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<std::size_t>(shape_volume(shape_)), 0.0);
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
  if (shape_volume(shape) != static_cast<std::int64_t>(values.size())) {
    throw ShapeError("value count does not match shape volume");
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(values);
  return t;
}

void Tensor::reshape(std::vector<int> new_shape) {
  if (shape_volume(new_shape) != size()) {
    throw ShapeError("reshape changes element count");
  }
  shape_ = std::move(new_shape);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace endotool
