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

#include "endotool/train/losses.hpp"

#include <cmath>
#include <string>

#include "endotool/errors.hpp"

namespace endotool::train {

namespace {

void check_tool_shapes(const Tensor& logits, const Tensor& labels) {
  if (logits.rank() != 2 || labels.shape() != logits.shape()) {
    throw ShapeError("tool_loss: logits and labels must share an (N, T) shape");
  }
  for (std::int64_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw ValueError("tool_loss: labels must be exactly 0 or 1, entry " +
                       std::to_string(i) + " is " + std::to_string(labels[i]));
    }
  }
}

void check_phase_shapes(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2) {
    throw ShapeError("phase_loss: logits must be (N, P)");
  }
  if (static_cast<std::int64_t>(labels.size()) != logits.dim(0)) {
    throw ShapeError("phase_loss: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(logits.dim(0)) + " rows");
  }
  const int p = logits.dim(1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= p) {
      throw ValueError("phase_loss: label " + std::to_string(labels[i]) +
                       " at row " + std::to_string(i) + " is outside 0.." +
                       std::to_string(p - 1));
    }
  }
}

double softplus_of_negative_abs(double z) {
  // log(1 + exp(-|z|)), always well conditioned.
  return std::log1p(std::exp(-std::abs(z)));
}

double stable_logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double tool_loss(const Tensor& tool_logits, const Tensor& labels) {
  check_tool_shapes(tool_logits, labels);
  double sum = 0.0;
  for (std::int64_t i = 0; i < tool_logits.size(); ++i) {
    const double z = tool_logits[i];
    const double y = labels[i];
    sum += std::max(z, 0.0) - z * y + softplus_of_negative_abs(z);
  }
  return sum / static_cast<double>(tool_logits.size());
}

double tool_loss_with_grad(const Tensor& tool_logits, const Tensor& labels,
                           Tensor& d_logits) {
  check_tool_shapes(tool_logits, labels);
  d_logits = Tensor::zeros(tool_logits.shape());
  const double inv_n = 1.0 / static_cast<double>(tool_logits.size());
  double sum = 0.0;
  for (std::int64_t i = 0; i < tool_logits.size(); ++i) {
    const double z = tool_logits[i];
    const double y = labels[i];
    sum += std::max(z, 0.0) - z * y + softplus_of_negative_abs(z);
    d_logits[i] = (stable_logistic(z) - y) * inv_n;
  }
  return sum * inv_n;
}

double phase_loss(const Tensor& phase_logits, const std::vector<int>& labels) {
  check_phase_shapes(phase_logits, labels);
  const int n = phase_logits.dim(0);
  const int p = phase_logits.dim(1);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double zmax = phase_logits.at2(i, 0);
    for (int j = 1; j < p; ++j) zmax = std::max(zmax, phase_logits.at2(i, j));
    double acc = 0.0;
    for (int j = 0; j < p; ++j) acc += std::exp(phase_logits.at2(i, j) - zmax);
    const double lse = zmax + std::log(acc);
    sum += lse - phase_logits.at2(i, labels[static_cast<std::size_t>(i)]);
  }
  return sum / static_cast<double>(n);
}

double phase_loss_with_grad(const Tensor& phase_logits,
                            const std::vector<int>& labels, Tensor& d_logits) {
  check_phase_shapes(phase_logits, labels);
  const int n = phase_logits.dim(0);
  const int p = phase_logits.dim(1);
  d_logits = Tensor::zeros(phase_logits.shape());
  const double inv_n = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double zmax = phase_logits.at2(i, 0);
    for (int j = 1; j < p; ++j) zmax = std::max(zmax, phase_logits.at2(i, j));
    double acc = 0.0;
    for (int j = 0; j < p; ++j) acc += std::exp(phase_logits.at2(i, j) - zmax);
    const double lse = zmax + std::log(acc);
    const int label = labels[static_cast<std::size_t>(i)];
    sum += lse - phase_logits.at2(i, label);
    for (int j = 0; j < p; ++j) {
      const double softmax = std::exp(phase_logits.at2(i, j) - lse);
      d_logits.at2(i, j) = (softmax - (j == label ? 1.0 : 0.0)) * inv_n;
    }
  }
  return sum * inv_n;
}

double joint_loss(double tool, std::optional<double> phase,
                  const TrainingConfig& config) {
  if (config.tool_loss_weight < 0.0 || config.phase_loss_weight < 0.0) {
    throw ConfigError("loss weights must be non-negative");
  }
  double total = config.tool_loss_weight * tool;
  if (phase.has_value()) {
    total += config.phase_loss_weight * *phase;
  }
  return total;
}

}  // namespace endotool::train
