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

#include "endotool/net/model.hpp"

namespace endotool::net {

// Checkpoint layout: the ASCII magic "ENDOTOOLCKPT1\n", a little-endian
// uint64 byte length of a JSON manifest, the manifest itself (format version,
// full model spec, and an ordered list of {name, shape, dtype} tensor
// entries), then the raw little-endian float32 buffers in manifest order.
// Parameters are float32 on disk and double in memory.

inline constexpr char kCheckpointMagic[] = "ENDOTOOLCKPT1\n";

void save_checkpoint(const Model& model, const std::filesystem::path& path);

/// Rebuilds the model from the spec embedded in the file. Structural damage
/// (bad magic, truncation, malformed manifest) throws FormatError; tensor
/// name/shape disagreements throw LoadError listing every offender.
Model load_checkpoint(const std::filesystem::path& path);

/// Same, but additionally requires the stored spec to match `expected`:
/// a variant mismatch throws ConfigError, parameter-shape differences throw
/// LoadError naming the layers, any other spec difference throws ConfigError.
Model load_checkpoint(const std::filesystem::path& path,
                      const ModelSpec& expected);

/// Copies every backbone tensor (everything except fc_tool/fc_phase) from a
/// checkpoint into an existing model. Head tensors in the file are ignored;
/// missing or mis-shaped backbone tensors throw LoadError listing them all.
void load_backbone_weights(Model& model, const std::filesystem::path& path);

}  // namespace endotool::net
