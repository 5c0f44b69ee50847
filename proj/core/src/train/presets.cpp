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

#include "endotool/train/presets.hpp"

namespace endotool::train {

namespace {

RunPreset make_preset(std::string name, net::Variant variant,
                      std::string dataset, int phase_count) {
  RunPreset p;
  p.name = std::move(name);
  p.variant = variant;
  p.dataset = std::move(dataset);
  p.default_phase_count = phase_count;
  p.config = TrainingConfig{};  // the documented schedule, verbatim
  p.config.preset = p.name;
  return p;
}

}  // namespace

const std::vector<RunPreset>& all_presets() {
  static const std::vector<RunPreset> presets = {
      make_preset("ToolNet-m2cai16", net::Variant::kToolNet, "m2cai16-tool", 0),
      make_preset("ToolNet-Cholec80", net::Variant::kToolNet, "Cholec80", 0),
      make_preset("EndoNet-Cholec80", net::Variant::kEndoNet, "Cholec80", 8),
  };
  return presets;
}

std::optional<RunPreset> preset_by_name(std::string_view name) {
  for (const RunPreset& p : all_presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

}  // namespace endotool::train
