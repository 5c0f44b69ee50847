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

#include "endotool/net/layers.hpp"

#include <string>

#include <Eigen/Dense>

#include "endotool/errors.hpp"

namespace endotool::net {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

void require_rank(const Tensor& x, int rank, const char* who) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(who) + ": expected rank " + std::to_string(rank) +
                     " input, got rank " + std::to_string(x.rank()));
  }
}

// Unfold one image (C,H,W) into a (C*k*k, oh*ow) column matrix.
void im2col(const double* x, int c, int h, int w, int kernel, int stride, int pad,
            int oh, int ow, double* col) {
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  const std::int64_t out_plane = static_cast<std::int64_t>(oh) * ow;
  std::int64_t row = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int ki = 0; ki < kernel; ++ki) {
      for (int kj = 0; kj < kernel; ++kj, ++row) {
        double* dst = col + row * out_plane;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ki;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kj;
            *dst++ = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                         ? x[ch * plane + static_cast<std::int64_t>(iy) * w + ix]
                         : 0.0;
          }
        }
      }
    }
  }
}

// Scatter-add of a column matrix back onto the image gradient.
void col2im(const double* col, int c, int h, int w, int kernel, int stride, int pad,
            int oh, int ow, double* gx) {
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  const std::int64_t out_plane = static_cast<std::int64_t>(oh) * ow;
  std::int64_t row = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int ki = 0; ki < kernel; ++ki) {
      for (int kj = 0; kj < kernel; ++kj, ++row) {
        const double* src = col + row * out_plane;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ki;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kj;
            if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
              gx[ch * plane + static_cast<std::int64_t>(iy) * w + ix] += src[oy * ow + ox];
            }
          }
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear

Linear Linear::create(int in_dim, int out_dim) {
  Linear l;
  l.in_dim = in_dim;
  l.out_dim = out_dim;
  l.w = Tensor({out_dim, in_dim});
  l.b = Tensor({out_dim});
  l.gw = Tensor({out_dim, in_dim});
  l.gb = Tensor({out_dim});
  return l;
}

Tensor Linear::apply(const Tensor& x) const {
  require_rank(x, 2, "Linear");
  if (x.dim(1) != in_dim) {
    throw ShapeError("Linear: input width " + std::to_string(x.dim(1)) +
                     ", expected " + std::to_string(in_dim));
  }
  const int n = x.dim(0);
  Tensor y({n, out_dim});
  ConstMatMap xm(x.data(), n, in_dim);
  ConstMatMap wm(w.data(), out_dim, in_dim);
  MatMap ym(y.data(), n, out_dim);
  ym.noalias() = xm * wm.transpose();
  for (int i = 0; i < n; ++i) {
    for (int o = 0; o < out_dim; ++o) y.at2(i, o) += b[o];
  }
  return y;
}

Tensor Linear::apply_train(const Tensor& x) {
  cached_input = x;
  return apply(x);
}

Tensor Linear::backward(const Tensor& gy) {
  const int n = gy.dim(0);
  ConstMatMap gym(gy.data(), n, out_dim);
  ConstMatMap xm(cached_input.data(), n, in_dim);
  MatMap gwm(gw.data(), out_dim, in_dim);
  gwm.noalias() += gym.transpose() * xm;
  for (int i = 0; i < n; ++i) {
    for (int o = 0; o < out_dim; ++o) gb[o] += gy.at2(i, o);
  }
  Tensor gx({n, in_dim});
  ConstMatMap wm(w.data(), out_dim, in_dim);
  MatMap gxm(gx.data(), n, in_dim);
  gxm.noalias() = gym * wm;
  return gx;
}

void Linear::zero_grads() {
  gw.fill(0.0);
  gb.fill(0.0);
}

// ---------------------------------------------------------------------------
// Relu

Tensor Relu::apply(const Tensor& x) const {
  Tensor y = x;
  double* p = y.data();
  for (std::int64_t i = 0; i < y.size(); ++i) {
    if (p[i] < 0.0) p[i] = 0.0;
  }
  return y;
}

Tensor Relu::apply_train(const Tensor& x) {
  cached_out = apply(x);
  return cached_out;
}

Tensor Relu::backward(const Tensor& gy) const {
  Tensor gx = gy;
  const double* y = cached_out.data();
  double* g = gx.data();
  for (std::int64_t i = 0; i < gx.size(); ++i) {
    if (y[i] <= 0.0) g[i] = 0.0;
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d Conv2d::create(int in_channels, int out_channels, int kernel, int stride,
                      int padding) {
  Conv2d c;
  c.in_channels = in_channels;
  c.out_channels = out_channels;
  c.kernel = kernel;
  c.stride = stride;
  c.padding = padding;
  c.w = Tensor({out_channels, in_channels, kernel, kernel});
  c.b = Tensor({out_channels});
  c.gw = Tensor({out_channels, in_channels, kernel, kernel});
  c.gb = Tensor({out_channels});
  return c;
}

std::pair<int, int> Conv2d::output_hw(int h, int w) const {
  const int oh = (h + 2 * padding - kernel) / stride + 1;
  const int ow = (w + 2 * padding - kernel) / stride + 1;
  return {oh, ow};
}

Tensor Conv2d::apply(const Tensor& x) const {
  require_rank(x, 4, "Conv2d");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w_in = x.dim(3);
  if (c != in_channels) {
    throw ShapeError("Conv2d: input has " + std::to_string(c) + " channels, expected " +
                     std::to_string(in_channels));
  }
  const auto [oh, ow] = output_hw(h, w_in);
  const int ckk = in_channels * kernel * kernel;
  Tensor y({n, out_channels, oh, ow});
  Tensor col({ckk, oh * ow});
  ConstMatMap wm(w.data(), out_channels, ckk);
  for (int i = 0; i < n; ++i) {
    im2col(x.data() + static_cast<std::int64_t>(i) * c * h * w_in, c, h, w_in, kernel,
           stride, padding, oh, ow, col.data());
    ConstMatMap cm(col.data(), ckk, oh * ow);
    MatMap ym(y.data() + static_cast<std::int64_t>(i) * out_channels * oh * ow,
              out_channels, oh * ow);
    ym.noalias() = wm * cm;
    for (int o = 0; o < out_channels; ++o) ym.row(o).array() += b[o];
  }
  return y;
}

Tensor Conv2d::apply_train(const Tensor& x) {
  require_rank(x, 4, "Conv2d");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w_in = x.dim(3);
  if (c != in_channels) {
    throw ShapeError("Conv2d: input has " + std::to_string(c) + " channels, expected " +
                     std::to_string(in_channels));
  }
  const auto [oh, ow] = output_hw(h, w_in);
  const int ckk = in_channels * kernel * kernel;
  cached_in_shape = x.shape();
  cached_cols = Tensor({n, ckk, oh * ow});
  Tensor y({n, out_channels, oh, ow});
  ConstMatMap wm(w.data(), out_channels, ckk);
  for (int i = 0; i < n; ++i) {
    double* col = cached_cols.data() + static_cast<std::int64_t>(i) * ckk * oh * ow;
    im2col(x.data() + static_cast<std::int64_t>(i) * c * h * w_in, c, h, w_in, kernel,
           stride, padding, oh, ow, col);
    ConstMatMap cm(col, ckk, oh * ow);
    MatMap ym(y.data() + static_cast<std::int64_t>(i) * out_channels * oh * ow,
              out_channels, oh * ow);
    ym.noalias() = wm * cm;
    for (int o = 0; o < out_channels; ++o) ym.row(o).array() += b[o];
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
  const int n = cached_in_shape[0], c = cached_in_shape[1], h = cached_in_shape[2],
            w_in = cached_in_shape[3];
  const auto [oh, ow] = output_hw(h, w_in);
  const int ckk = in_channels * kernel * kernel;
  Tensor gx({n, c, h, w_in});
  Tensor gcol({ckk, oh * ow});
  MatMap gwm(gw.data(), out_channels, ckk);
  ConstMatMap wm(w.data(), out_channels, ckk);
  for (int i = 0; i < n; ++i) {
    ConstMatMap gym(gy.data() + static_cast<std::int64_t>(i) * out_channels * oh * ow,
                    out_channels, oh * ow);
    ConstMatMap cm(cached_cols.data() + static_cast<std::int64_t>(i) * ckk * oh * ow,
                   ckk, oh * ow);
    gwm.noalias() += gym * cm.transpose();
    for (int o = 0; o < out_channels; ++o) gb[o] += gym.row(o).sum();
    MatMap gcm(gcol.data(), ckk, oh * ow);
    gcm.noalias() = wm.transpose() * gym;
    col2im(gcol.data(), c, h, w_in, kernel, stride, padding, oh, ow,
           gx.data() + static_cast<std::int64_t>(i) * c * h * w_in);
  }
  return gx;
}

void Conv2d::zero_grads() {
  gw.fill(0.0);
  gb.fill(0.0);
}

// ---------------------------------------------------------------------------
// MaxPool2d

std::pair<int, int> MaxPool2d::output_hw(int h, int w) const {
  return {(h - kernel) / stride + 1, (w - kernel) / stride + 1};
}

Tensor MaxPool2d::apply(const Tensor& x) const {
  require_rank(x, 4, "MaxPool2d");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto [oh, ow] = output_hw(h, w);
  Tensor y({n, c, oh, ow});
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double best = -std::numeric_limits<double>::infinity();
          for (int ki = 0; ki < kernel; ++ki) {
            for (int kj = 0; kj < kernel; ++kj) {
              best = std::max(best, x.at4(i, ch, oy * stride + ki, ox * stride + kj));
            }
          }
          y.at4(i, ch, oy, ox) = best;
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2d::apply_train(const Tensor& x) {
  require_rank(x, 4, "MaxPool2d");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto [oh, ow] = output_hw(h, w);
  cached_in_shape = x.shape();
  cached_argmax.assign(static_cast<std::size_t>(shape_volume({n, c, oh, ow})), 0);
  Tensor y({n, c, oh, ow});
  std::size_t out_i = 0;
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, ++out_i) {
          double best = -std::numeric_limits<double>::infinity();
          std::int64_t best_idx = 0;
          for (int ki = 0; ki < kernel; ++ki) {
            for (int kj = 0; kj < kernel; ++kj) {
              const int iy = oy * stride + ki;
              const int ix = ox * stride + kj;
              const std::int64_t flat =
                  ((static_cast<std::int64_t>(i) * c + ch) * h + iy) * w + ix;
              const double v = x[flat];
              if (v > best) {
                best = v;
                best_idx = flat;
              }
            }
          }
          y[static_cast<std::int64_t>(out_i)] = best;
          cached_argmax[out_i] = best_idx;
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& gy) const {
  Tensor gx(cached_in_shape);
  for (std::size_t i = 0; i < cached_argmax.size(); ++i) {
    gx[cached_argmax[i]] += gy[static_cast<std::int64_t>(i)];
  }
  return gx;
}

}  // namespace endotool::net
