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

#include "endotool/train/config.hpp"

#include <cmath>

#include "endotool/errors.hpp"

namespace endotool::train {

void TrainingConfig::validate() const {
  if (total_iterations < 1) {
    throw ConfigError("total_iterations must be positive, got " +
                      std::to_string(total_iterations));
  }
  if (batch_size < 1) {
    throw ConfigError("batch_size must be positive, got " +
                      std::to_string(batch_size));
  }
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) {
    throw ConfigError("base_lr must be a positive real");
  }
  if (!(head_lr > 0.0) || !std::isfinite(head_lr)) {
    throw ConfigError("head_lr must be a positive real");
  }
  if (!(decay_factor > 0.0) || !(decay_factor < 1.0)) {
    throw ConfigError("decay_factor must lie in (0, 1)");
  }
  if (decay_every < 1) {
    throw ConfigError("decay_every must be positive, got " +
                      std::to_string(decay_every));
  }
  if (!(tool_loss_weight >= 0.0) || !std::isfinite(tool_loss_weight)) {
    throw ConfigError("tool_loss_weight must be non-negative");
  }
  if (!(phase_loss_weight >= 0.0) || !std::isfinite(phase_loss_weight)) {
    throw ConfigError("phase_loss_weight must be non-negative");
  }
  if (!(momentum >= 0.0) || !(momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ConfigError("weight_decay must be non-negative");
  }
  if (checkpoint_every < 0) {
    throw ConfigError("checkpoint_every must be non-negative, got " +
                      std::to_string(checkpoint_every));
  }
}

double lr_at(long iteration, LrGroup group, const TrainingConfig& config) {
  if (iteration < 0) {
    throw ConfigError("iteration must be non-negative, got " +
                      std::to_string(iteration));
  }
  double lr = group == LrGroup::kBackbone ? config.base_lr : config.head_lr;
  const long k = iteration / config.decay_every;
  for (long i = 0; i < k; ++i) {
    lr *= config.decay_factor;
  }
  return lr;
}

void sgd_update(Tensor& param, const Tensor& grad, Tensor& velocity, double lr,
                double momentum, double weight_decay) {
  if (grad.shape() != param.shape() || velocity.shape() != param.shape()) {
    throw ShapeError("sgd_update: parameter, gradient, and velocity shapes differ");
  }
  for (std::int64_t i = 0; i < param.size(); ++i) {
    const double v = momentum * velocity[i] + lr * (grad[i] + weight_decay * param[i]);
    velocity[i] = v;
    param[i] -= v;
  }
}

}  // namespace endotool::train
