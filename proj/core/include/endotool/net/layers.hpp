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
#include <utility>
#include <vector>

#include "endotool/tensor.hpp"

namespace endotool::net {

// Value-semantic layers. `apply` is pure and safe for concurrent use;
// `apply_train` caches what `backward` needs and is single-writer only.
// `backward` accumulates parameter gradients and returns the input gradient.

struct Linear {
  int in_dim = 0;
  int out_dim = 0;
  Tensor w;   // (out, in)
  Tensor b;   // (out)
  Tensor gw;
  Tensor gb;
  Tensor cached_input;

  static Linear create(int in_dim, int out_dim);

  Tensor apply(const Tensor& x) const;      // x: (N, in) -> (N, out)
  Tensor apply_train(const Tensor& x);
  Tensor backward(const Tensor& gy);
  void zero_grads();
};

struct Relu {
  Tensor cached_out;

  Tensor apply(const Tensor& x) const;
  Tensor apply_train(const Tensor& x);
  Tensor backward(const Tensor& gy) const;
};

struct Conv2d {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
  int padding = 0;
  Tensor w;   // (out_c, in_c, k, k)
  Tensor b;   // (out_c)
  Tensor gw;
  Tensor gb;
  Tensor cached_cols;             // (N, in_c*k*k, oh*ow)
  std::vector<int> cached_in_shape;

  static Conv2d create(int in_channels, int out_channels, int kernel, int stride,
                       int padding);

  std::pair<int, int> output_hw(int h, int w) const;
  Tensor apply(const Tensor& x) const;      // x: (N, C, H, W)
  Tensor apply_train(const Tensor& x);
  Tensor backward(const Tensor& gy);
  void zero_grads();
};

struct MaxPool2d {
  int kernel = 2;
  int stride = 2;
  std::vector<std::int64_t> cached_argmax;  // flat input index per output cell
  std::vector<int> cached_in_shape;

  std::pair<int, int> output_hw(int h, int w) const;
  Tensor apply(const Tensor& x) const;
  Tensor apply_train(const Tensor& x);
  Tensor backward(const Tensor& gy) const;
};

}  // namespace endotool::net
