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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "endotool/data/annotations.hpp"
#include "endotool/io/frame_source.hpp"
#include "endotool/net/model.hpp"
#include "endotool/train/config.hpp"

namespace endotool::train {

struct LogEntry {
  long iteration = 0;  // 0-based, matching lr_at
  double lr_backbone = 0.0;
  double lr_heads = 0.0;
  double loss_tool = 0.0;
  std::optional<double> loss_phase;  // multi-task runs only
  double loss_total = 0.0;

  bool operator==(const LogEntry&) const = default;
};

struct Snapshot {
  long iteration = 0;  // completed steps at snapshot time
  double value = 0.0;

  bool operator==(const Snapshot&) const = default;
};

struct TrainingLog {
  std::vector<LogEntry> entries;  // exactly total_iterations of them
  std::vector<Snapshot> snapshots;

  bool operator==(const TrainingLog&) const = default;
};

/// Tab-separated export: header
/// iter\tlr_backbone\tlr_heads\tloss_tool\tloss_phase\tloss_total
/// then one row per entry; a single-task run writes "-" for loss_phase.
std::string training_log_to_tsv(const TrainingLog& log);

struct TrainOptions {
  /// When set, the directory receives periodic checkpoints, final.ckpt,
  /// train_log.tsv, and run_meta.json.
  std::optional<std::filesystem::path> run_dir;
  /// Every N completed iterations, record snapshot_fn(model, completed) in
  /// the log. 0 disables snapshots.
  long snapshot_every = 0;
  std::function<double(const net::Model&, long)> snapshot_fn;
};

/// Runs exactly total_iterations momentum-SGD steps over batches sampled
/// uniformly with replacement from the manifest. Deterministic given
/// (seed, data, config). The model is updated in place.
TrainingLog train(net::Model& model, const data::DatasetManifest& manifest,
                  const io::FrameSource& frames, const TrainingConfig& config,
                  const TrainOptions& options = {});

struct LabeledBatch {
  Tensor images;       // (N, 3, H, W)
  Tensor tool_labels;  // (N, 7) of exact 0/1
  std::optional<std::vector<int>> phase_labels;  // length N
};

/// Central-difference audit of the analytic gradients of the joint loss:
/// returns max over every parameter element of
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
/// Intended for models small enough to difference exhaustively.
double grad_check(net::Model& model, const LabeledBatch& batch,
                  const TrainingConfig& config, double h = 1e-5);

}  // namespace endotool::train
