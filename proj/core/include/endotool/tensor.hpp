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

#include <cstdint>
#include <vector>

namespace endotool {

/// Dense row-major double tensor. Doubles everywhere so central-difference
/// gradient checks are meaningful; checkpoints downcast to float32 on disk.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor from(std::vector<int> shape, std::vector<double> values);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  double& at2(int a, int b) { return data_[idx2(a, b)]; }
  double at2(int a, int b) const { return data_[idx2(a, b)]; }
  double& at3(int a, int b, int c) { return data_[idx3(a, b, c)]; }
  double at3(int a, int b, int c) const { return data_[idx3(a, b, c)]; }
  double& at4(int a, int b, int c, int d) { return data_[idx4(a, b, c, d)]; }
  double at4(int a, int b, int c, int d) const { return data_[idx4(a, b, c, d)]; }

  /// Reinterpret the metadata; element count must be unchanged.
  void reshape(std::vector<int> new_shape);

  void fill(double v);
  bool all_finite() const;

  bool operator==(const Tensor& other) const = default;

 private:
  std::size_t idx2(int a, int b) const {
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(shape_[1]) +
           static_cast<std::size_t>(b);
  }
  std::size_t idx3(int a, int b, int c) const {
    return (static_cast<std::size_t>(a) * static_cast<std::size_t>(shape_[1]) +
            static_cast<std::size_t>(b)) *
               static_cast<std::size_t>(shape_[2]) +
           static_cast<std::size_t>(c);
  }
  std::size_t idx4(int a, int b, int c, int d) const {
    return ((static_cast<std::size_t>(a) * static_cast<std::size_t>(shape_[1]) +
             static_cast<std::size_t>(b)) *
                static_cast<std::size_t>(shape_[2]) +
            static_cast<std::size_t>(c)) *
               static_cast<std::size_t>(shape_[3]) +
           static_cast<std::size_t>(d);
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

std::int64_t shape_volume(const std::vector<int>& shape);

}  // namespace endotool
