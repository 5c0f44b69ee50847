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
#include <string>
#include <string_view>
#include <vector>

#include "endotool/net/model.hpp"
#include "endotool/train/config.hpp"

namespace endotool::train {

/// The three named experiment configurations: the single-task network on
/// each corpus and the multi-task network on the larger one. A preset fixes
/// the variant and the fine-tuning schedule; dataset paths, backbone scale,
/// and seeds stay caller-provided.
struct RunPreset {
  std::string name;
  net::Variant variant = net::Variant::kToolNet;
  std::string dataset;          // corpus the preset is named after
  int default_phase_count = 0;  // EndoNet presets only
  TrainingConfig config;
};

const std::vector<RunPreset>& all_presets();
std::optional<RunPreset> preset_by_name(std::string_view name);

}  // namespace endotool::train
