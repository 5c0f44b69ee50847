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
#include <optional>
#include <string>

#include "endotool/tensor.hpp"

namespace endotool::train {

/// Fine-tuning hyperparameters. The defaults are the documented schedule:
/// 50000 iterations, batches of 50, backbone lr 1e-3, head lr 1e-2, decayed
/// by 0.1 every 20000 iterations.
struct TrainingConfig {
  long total_iterations = 50000;
  long batch_size = 50;
  double base_lr = 1e-3;
  double head_lr = 1e-2;
  double decay_factor = 0.1;
  long decay_every = 20000;
  double tool_loss_weight = 1.0;
  double phase_loss_weight = 1.0;
  std::uint64_t seed = 0;
  std::optional<std::string> preset;

  // Conventional fine-tuning defaults; the source schedule names only the
  // learning rates. Recorded in run metadata.
  double momentum = 0.9;
  double weight_decay = 5e-4;
  long checkpoint_every = 10000;
  bool horizontal_flip = false;

  void validate() const;

  bool operator==(const TrainingConfig&) const = default;
};

enum class LrGroup { kBackbone, kNewHeads };

/// Learning rate for `group` at a 0-based iteration:
/// group_base * decay_factor^floor(iteration / decay_every). The power is
/// evaluated by repeated multiplication so that the default schedule hits
/// the decade values 1e-3/1e-4/1e-5 (and 1e-2/1e-3/1e-4) exactly in double
/// precision, which `pow` does not.
double lr_at(long iteration, LrGroup group, const TrainingConfig& config);

/// Momentum SGD with coupled weight decay:
///   v <- momentum * v + lr * (grad + weight_decay * param);  param <- param - v
void sgd_update(Tensor& param, const Tensor& grad, Tensor& velocity, double lr,
                double momentum, double weight_decay);

}  // namespace endotool::train
