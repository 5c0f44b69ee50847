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

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "endotool/data/annotations.hpp"
#include "endotool/rng.hpp"
#include "endotool/tensor.hpp"

namespace endotool::synth {

/// Desk-scale synthetic dataset: each present tool is drawn as a fixed
/// color/shape glyph at a jittered home position, so presence is visually
/// decodable and the task is nearly separable.
struct SyntheticConfig {
  int height = 64;
  int width = 64;
  std::array<double, data::kToolCount> tool_priors = {0.4, 0.4, 0.4, 0.4,
                                                      0.4, 0.4, 0.4};
  int phase_count = 8;
  long frames_per_video = 100;
  int video_count = 4;
  std::uint64_t seed = 0;
  /// Overrides the priors of Scissors, Clipper, and Irrigator (tools 3-5)
  /// to 0.02, mimicking instruments that appear only briefly.
  bool scarcity_profile = false;

  /// Priors with the scarcity override applied.
  std::array<double, data::kToolCount> effective_priors() const;

  void validate() const;
};

/// Draws the 7 presence bits (always consumes exactly 7 uniforms).
data::ToolBits sample_labels(Rng& rng,
                             const std::array<double, data::kToolCount>& priors);

/// Renders one frame for the given labels: dark background, sparse noise,
/// then one glyph per present tool. Consumes RNG draws for noise and for the
/// jitter of present tools only.
Tensor render_frame(const SyntheticConfig& config, const data::ToolBits& labels,
                    Rng& rng);

/// Phase of a frame under the left-to-right contiguous segment structure.
int phase_of(long frame_index, long frames_per_video, int phase_count);

/// Writes images/, annotations/, and dataset.json under out_root and
/// returns the assembled manifest. Deterministic given config.seed; each
/// video uses an RNG stream derived from (seed, video index).
data::DatasetManifest generate_dataset(const SyntheticConfig& config,
                                       const std::filesystem::path& out_root);

struct ScarcityStats {
  std::array<std::int64_t, data::kToolCount> positives{};
  /// Tool indices ordered by ascending positive count (ties by tool index).
  std::array<int, data::kToolCount> ranking{};
};

ScarcityStats scarcity_stats(const data::DatasetManifest& manifest);

}  // namespace endotool::synth
