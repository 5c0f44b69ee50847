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

#include <optional>
#include <vector>

#include "endotool/tensor.hpp"
#include "endotool/train/config.hpp"

namespace endotool::train {

/// Mean over N*7 entries of the per-tool logistic cross-entropy between a
/// logit z and a binary label y, computed in the stable softplus form
///   max(z, 0) - z*y + log1p(exp(-|z|)).
/// Labels must be exactly 0 or 1.
double tool_loss(const Tensor& tool_logits, const Tensor& labels);

/// Same value; also writes d(loss)/d(logits) = (sigmoid(z) - y) / (N*7).
double tool_loss_with_grad(const Tensor& tool_logits, const Tensor& labels,
                           Tensor& d_logits);

/// Mean over N of softmax cross-entropy, via logsumexp. Labels in 0..P-1.
double phase_loss(const Tensor& phase_logits, const std::vector<int>& labels);

/// Same value; also writes d(loss)/d(logits) = (softmax - onehot) / N.
double phase_loss_with_grad(const Tensor& phase_logits,
                            const std::vector<int>& labels, Tensor& d_logits);

/// tool_loss_weight * tool + phase_loss_weight * phase; the phase term
/// contributes zero when absent (single-task runs).
double joint_loss(double tool, std::optional<double> phase,
                  const TrainingConfig& config);

}  // namespace endotool::train
