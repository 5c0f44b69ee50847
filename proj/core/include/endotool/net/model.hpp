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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "endotool/net/layers.hpp"
#include "endotool/tensor.hpp"

namespace endotool::net {

enum class Variant { kToolNet, kEndoNet };

std::string_view variant_name(Variant v);
std::optional<Variant> variant_from_name(std::string_view name);

/// What the phase head consumes next to the backbone features. The reference
/// figure shows the tool output feeding the phase head but not whether that
/// output is pre- or post-logistic; confidences are the default and the
/// alternative stays selectable.
enum class PhaseHeadInput { kConfidences, kLogits };

struct ConvStageSpec {
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int padding = 0;
  bool pool = false;
  int pool_kernel = 2;
  int pool_stride = 2;

  bool operator==(const ConvStageSpec&) const = default;
};

struct BackboneSpec {
  std::vector<ConvStageSpec> stages;
  // fc6/fc7 widths; fc6_dim == 0 removes both backbone FC layers and the
  // flattened convolutional output becomes the feature vector directly
  // (used for linear probes and gradient-check fixtures).
  int fc6_dim = 4096;
  int feature_dim = 4096;

  bool has_fc() const { return fc6_dim > 0; }

  /// Five conv stages plus fc6/fc7 at 4096, the documented default.
  static BackboneSpec alexnet();
  /// Two small stages, fc6=64, feature_dim=32; runs on CPU in seconds.
  static BackboneSpec reduced();

  bool operator==(const BackboneSpec&) const = default;
};

struct ModelSpec {
  Variant variant = Variant::kToolNet;
  int input_channels = 3;
  int input_height = 227;
  int input_width = 227;
  BackboneSpec backbone;
  int tool_count = 7;
  std::optional<int> phase_count;  // required iff variant == kEndoNet
  PhaseHeadInput phase_head_input = PhaseHeadInput::kConfidences;
  // Subtracted from [0,1] pixel values before the first layer; recorded in
  // run metadata and in checkpoints.
  std::array<double, 3> channel_means = {0.5, 0.5, 0.5};

  void validate() const;
  /// Channels/height/width after the conv stack.
  std::array<int, 3> conv_output_dims() const;
  int flatten_dim() const;
  int feature_dim() const;

  bool operator==(const ModelSpec&) const = default;
};

std::string model_spec_to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const std::string& text);

struct NamedShape {
  std::string name;
  std::vector<int> shape;

  bool operator==(const NamedShape&) const = default;
};

/// Parameter names and shapes implied by a spec, in checkpoint order.
/// Pure arithmetic; allocates no parameters.
std::vector<NamedShape> expected_parameter_shapes(const ModelSpec& spec);

struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
};

struct ForwardBatch {
  Tensor features;          // (N, feature_dim)
  Tensor tool_logits;       // (N, 7)
  Tensor tool_confidences;  // (N, 7), elementwise logistic of the logits
  std::optional<Tensor> phase_logits;  // (N, P), EndoNet only
};

struct LayerGroups {
  std::vector<std::string> backbone;
  std::vector<std::string> new_heads;  // fc_tool (+ fc_phase for EndoNet)
};

class Model {
 public:
  Model() = default;

  /// Backbone He-initialized, heads N(0, 0.01), all biases zero; every draw
  /// comes from one seed-derived stream in parameter order, so equal seeds
  /// give bit-identical parameters.
  static Model init(const ModelSpec& spec, std::uint64_t seed);

  /// Same, then overwrites the backbone tensors from a weights file. Head
  /// layers are always freshly initialized. Shape mismatches throw LoadError
  /// naming every offending layer.
  static Model init(const ModelSpec& spec, std::uint64_t seed,
                    const std::optional<std::filesystem::path>& pretrained_backbone);

  /// All parameters allocated and zero-filled; used by checkpoint loading
  /// and by tests that set weights by hand.
  static Model zeros(const ModelSpec& spec);

  const ModelSpec& spec() const { return spec_; }

  /// Pure forward pass; re-entrant, parameters untouched.
  ForwardBatch forward(const Tensor& batch) const;

  /// Forward pass that caches activations for backward(). Single writer.
  ForwardBatch forward_train(const Tensor& batch);

  /// Backpropagate from head-output gradients into all parameter gradients.
  /// `d_phase_logits` may be null (ToolNet, or a phase term weighted to zero
  /// can simply pass zeros).
  void backward(const Tensor& d_tool_logits, const Tensor* d_phase_logits);

  void zero_grads();

  std::vector<ParamRef> parameters();
  std::vector<std::pair<std::string, const Tensor*>> parameter_values() const;

 private:
  void build_layers();
  void check_input(const Tensor& batch) const;

  ModelSpec spec_;

  struct Stage {
    Conv2d conv;
    Relu relu;
    std::optional<MaxPool2d> pool;
  };
  std::vector<Stage> stages_;

  struct FcBlock {
    Linear fc6;
    Relu relu6;
    Linear fc7;
    Relu relu7;
  };
  std::optional<FcBlock> fc_;

  Linear fc_tool_;
  std::optional<Linear> fc_phase_;

  // forward_train caches
  std::vector<int> cached_conv_out_shape_;
  Tensor cached_confidences_;
};

LayerGroups layer_groups(const Model& model);

}  // namespace endotool::net
