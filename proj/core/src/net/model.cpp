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

#include "endotool/net/model.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

#include <json.hpp>

#include "endotool/errors.hpp"
#include "endotool/net/checkpoint.hpp"
#include "endotool/rng.hpp"

namespace endotool::net {

namespace {

std::string shape_string(const std::vector<int>& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(shape[i]);
  }
  out += ")";
  return out;
}

double stable_logistic(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::string_view variant_name(Variant v) {
  return v == Variant::kToolNet ? "ToolNet" : "EndoNet";
}

std::optional<Variant> variant_from_name(std::string_view name) {
  if (name == "ToolNet") return Variant::kToolNet;
  if (name == "EndoNet") return Variant::kEndoNet;
  return std::nullopt;
}

BackboneSpec BackboneSpec::alexnet() {
  BackboneSpec b;
  b.stages = {
      {.out_channels = 96, .kernel = 11, .stride = 4, .padding = 0, .pool = true, .pool_kernel = 3, .pool_stride = 2},
      {.out_channels = 256, .kernel = 5, .stride = 1, .padding = 2, .pool = true, .pool_kernel = 3, .pool_stride = 2},
      {.out_channels = 384, .kernel = 3, .stride = 1, .padding = 1, .pool = false},
      {.out_channels = 384, .kernel = 3, .stride = 1, .padding = 1, .pool = false},
      {.out_channels = 256, .kernel = 3, .stride = 1, .padding = 1, .pool = true, .pool_kernel = 3, .pool_stride = 2},
  };
  b.fc6_dim = 4096;
  b.feature_dim = 4096;
  return b;
}

BackboneSpec BackboneSpec::reduced() {
  BackboneSpec b;
  b.stages = {
      {.out_channels = 16, .kernel = 3, .stride = 2, .padding = 1, .pool = true, .pool_kernel = 2, .pool_stride = 2},
      {.out_channels = 32, .kernel = 3, .stride = 1, .padding = 1, .pool = true, .pool_kernel = 2, .pool_stride = 2},
  };
  b.fc6_dim = 64;
  b.feature_dim = 32;
  return b;
}

void ModelSpec::validate() const {
  if (input_channels != 3) {
    throw ConfigError("model input must have 3 channels, got " +
                      std::to_string(input_channels));
  }
  if (input_height < 1 || input_width < 1) {
    throw ConfigError("model input height and width must be positive, got " +
                      std::to_string(input_height) + "x" +
                      std::to_string(input_width));
  }
  if (tool_count != 7) {
    throw ConfigError("tool_count is fixed at 7, got " +
                      std::to_string(tool_count));
  }
  if (variant == Variant::kEndoNet) {
    if (!phase_count.has_value()) {
      throw ConfigError("EndoNet requires phase_count");
    }
    if (*phase_count < 2) {
      throw ConfigError("phase_count must be >= 2, got " +
                        std::to_string(*phase_count));
    }
  } else if (phase_count.has_value()) {
    throw ConfigError("ToolNet must not set phase_count");
  }
  if (backbone.stages.empty()) {
    throw ConfigError("backbone needs at least one convolutional stage");
  }
  for (std::size_t i = 0; i < backbone.stages.size(); ++i) {
    const ConvStageSpec& s = backbone.stages[i];
    const std::string where = "backbone stage " + std::to_string(i + 1);
    if (s.out_channels < 1) throw ConfigError(where + ": out_channels must be positive");
    if (s.kernel < 1) throw ConfigError(where + ": kernel must be positive");
    if (s.stride < 1) throw ConfigError(where + ": stride must be positive");
    if (s.padding < 0) throw ConfigError(where + ": padding must be non-negative");
    if (s.pool && (s.pool_kernel < 1 || s.pool_stride < 1)) {
      throw ConfigError(where + ": pool kernel and stride must be positive");
    }
  }
  if (backbone.fc6_dim < 0) {
    throw ConfigError("fc6_dim must be non-negative");
  }
  if (backbone.feature_dim < 1) {
    throw ConfigError("feature_dim must be positive");
  }
  for (double m : channel_means) {
    if (!std::isfinite(m)) throw ConfigError("channel means must be finite");
  }
  // Walks the conv stack and throws if any stage underflows the image.
  const std::array<int, 3> out = conv_output_dims();
  if (!backbone.has_fc() && backbone.feature_dim != out[0] * out[1] * out[2]) {
    throw ConfigError(
        "with fc6_dim=0 the feature_dim must equal the flattened conv output " +
        std::to_string(out[0] * out[1] * out[2]) + ", got " +
        std::to_string(backbone.feature_dim));
  }
}

std::array<int, 3> ModelSpec::conv_output_dims() const {
  int c = input_channels;
  int h = input_height;
  int w = input_width;
  for (std::size_t i = 0; i < backbone.stages.size(); ++i) {
    const ConvStageSpec& s = backbone.stages[i];
    const std::string where = "backbone stage " + std::to_string(i + 1);
    if (h + 2 * s.padding < s.kernel || w + 2 * s.padding < s.kernel) {
      throw ConfigError(where + ": kernel " + std::to_string(s.kernel) +
                        " exceeds padded input " + std::to_string(h) + "x" +
                        std::to_string(w));
    }
    h = (h + 2 * s.padding - s.kernel) / s.stride + 1;
    w = (w + 2 * s.padding - s.kernel) / s.stride + 1;
    c = s.out_channels;
    if (s.pool) {
      if (h < s.pool_kernel || w < s.pool_kernel) {
        throw ConfigError(where + ": pool kernel " +
                          std::to_string(s.pool_kernel) +
                          " exceeds its input " + std::to_string(h) + "x" +
                          std::to_string(w));
      }
      h = (h - s.pool_kernel) / s.pool_stride + 1;
      w = (w - s.pool_kernel) / s.pool_stride + 1;
    }
  }
  return {c, h, w};
}

int ModelSpec::flatten_dim() const {
  const std::array<int, 3> out = conv_output_dims();
  return out[0] * out[1] * out[2];
}

int ModelSpec::feature_dim() const {
  return backbone.has_fc() ? backbone.feature_dim : flatten_dim();
}

std::string model_spec_to_json(const ModelSpec& spec) {
  nlohmann::json j;
  j["variant"] = std::string(variant_name(spec.variant));
  j["input"] = {{"channels", spec.input_channels},
                {"height", spec.input_height},
                {"width", spec.input_width}};
  nlohmann::json stages = nlohmann::json::array();
  for (const ConvStageSpec& s : spec.backbone.stages) {
    stages.push_back({{"out_channels", s.out_channels},
                      {"kernel", s.kernel},
                      {"stride", s.stride},
                      {"padding", s.padding},
                      {"pool", s.pool},
                      {"pool_kernel", s.pool_kernel},
                      {"pool_stride", s.pool_stride}});
  }
  j["backbone"] = {{"stages", std::move(stages)},
                   {"fc6_dim", spec.backbone.fc6_dim},
                   {"feature_dim", spec.backbone.feature_dim}};
  j["tool_count"] = spec.tool_count;
  if (spec.phase_count.has_value()) {
    j["phase_count"] = *spec.phase_count;
  } else {
    j["phase_count"] = nullptr;
  }
  j["phase_head_input"] =
      spec.phase_head_input == PhaseHeadInput::kConfidences ? "confidences"
                                                            : "logits";
  j["channel_means"] = spec.channel_means;
  return j.dump(2);
}

ModelSpec model_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model spec is not valid JSON: ") + e.what());
  }
  ModelSpec spec;
  try {
    const auto v = variant_from_name(j.at("variant").get<std::string>());
    if (!v.has_value()) {
      throw FormatError("unknown model variant \"" +
                        j.at("variant").get<std::string>() + "\"");
    }
    spec.variant = *v;
    spec.input_channels = j.at("input").at("channels").get<int>();
    spec.input_height = j.at("input").at("height").get<int>();
    spec.input_width = j.at("input").at("width").get<int>();
    spec.backbone.stages.clear();
    for (const nlohmann::json& js : j.at("backbone").at("stages")) {
      ConvStageSpec s;
      s.out_channels = js.at("out_channels").get<int>();
      s.kernel = js.at("kernel").get<int>();
      s.stride = js.at("stride").get<int>();
      s.padding = js.at("padding").get<int>();
      s.pool = js.at("pool").get<bool>();
      s.pool_kernel = js.at("pool_kernel").get<int>();
      s.pool_stride = js.at("pool_stride").get<int>();
      spec.backbone.stages.push_back(s);
    }
    spec.backbone.fc6_dim = j.at("backbone").at("fc6_dim").get<int>();
    spec.backbone.feature_dim = j.at("backbone").at("feature_dim").get<int>();
    spec.tool_count = j.at("tool_count").get<int>();
    if (j.contains("phase_count") && !j.at("phase_count").is_null()) {
      spec.phase_count = j.at("phase_count").get<int>();
    }
    const std::string head = j.value("phase_head_input", "confidences");
    if (head == "confidences") {
      spec.phase_head_input = PhaseHeadInput::kConfidences;
    } else if (head == "logits") {
      spec.phase_head_input = PhaseHeadInput::kLogits;
    } else {
      throw FormatError("unknown phase_head_input \"" + head + "\"");
    }
    if (j.contains("channel_means")) {
      const auto means = j.at("channel_means").get<std::vector<double>>();
      if (means.size() != 3) {
        throw FormatError("channel_means must have exactly 3 entries");
      }
      std::copy(means.begin(), means.end(), spec.channel_means.begin());
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model spec JSON is malformed: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::vector<NamedShape> expected_parameter_shapes(const ModelSpec& spec) {
  spec.validate();
  std::vector<NamedShape> shapes;
  int in_c = spec.input_channels;
  for (std::size_t i = 0; i < spec.backbone.stages.size(); ++i) {
    const ConvStageSpec& s = spec.backbone.stages[i];
    const std::string name = "conv" + std::to_string(i + 1);
    shapes.push_back({name + ".weight", {s.out_channels, in_c, s.kernel, s.kernel}});
    shapes.push_back({name + ".bias", {s.out_channels}});
    in_c = s.out_channels;
  }
  if (spec.backbone.has_fc()) {
    shapes.push_back({"fc6.weight", {spec.backbone.fc6_dim, spec.flatten_dim()}});
    shapes.push_back({"fc6.bias", {spec.backbone.fc6_dim}});
    shapes.push_back({"fc7.weight", {spec.backbone.feature_dim, spec.backbone.fc6_dim}});
    shapes.push_back({"fc7.bias", {spec.backbone.feature_dim}});
  }
  const int feat = spec.feature_dim();
  shapes.push_back({"fc_tool.weight", {spec.tool_count, feat}});
  shapes.push_back({"fc_tool.bias", {spec.tool_count}});
  if (spec.variant == Variant::kEndoNet) {
    shapes.push_back({"fc_phase.weight", {*spec.phase_count, feat + spec.tool_count}});
    shapes.push_back({"fc_phase.bias", {*spec.phase_count}});
  }
  return shapes;
}

void Model::build_layers() {
  stages_.clear();
  fc_.reset();
  fc_phase_.reset();

  int in_c = spec_.input_channels;
  for (const ConvStageSpec& s : spec_.backbone.stages) {
    Stage stage;
    stage.conv = Conv2d::create(in_c, s.out_channels, s.kernel, s.stride, s.padding);
    if (s.pool) {
      MaxPool2d pool;
      pool.kernel = s.pool_kernel;
      pool.stride = s.pool_stride;
      stage.pool = pool;
    }
    stages_.push_back(std::move(stage));
    in_c = s.out_channels;
  }
  if (spec_.backbone.has_fc()) {
    FcBlock fc;
    fc.fc6 = Linear::create(spec_.flatten_dim(), spec_.backbone.fc6_dim);
    fc.fc7 = Linear::create(spec_.backbone.fc6_dim, spec_.backbone.feature_dim);
    fc_ = std::move(fc);
  }
  fc_tool_ = Linear::create(spec_.feature_dim(), spec_.tool_count);
  if (spec_.variant == Variant::kEndoNet) {
    fc_phase_ = Linear::create(spec_.feature_dim() + spec_.tool_count,
                               *spec_.phase_count);
  }
}

Model Model::init(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Model model;
  model.spec_ = spec;
  model.build_layers();

  // One stream, fixed traversal order: every weight tensor element in
  // parameters() order. Biases stay zero and consume no draws.
  Rng rng(seed);
  auto fill_gaussian = [&rng](Tensor& t, double stddev) {
    for (std::int64_t i = 0; i < t.size(); ++i) {
      t[i] = rng.normal(0.0, stddev);
    }
  };
  for (Stage& stage : model.stages_) {
    const Conv2d& c = stage.conv;
    const double fan_in = static_cast<double>(c.in_channels) * c.kernel * c.kernel;
    fill_gaussian(stage.conv.w, std::sqrt(2.0 / fan_in));
  }
  if (model.fc_.has_value()) {
    fill_gaussian(model.fc_->fc6.w, std::sqrt(2.0 / model.fc_->fc6.in_dim));
    fill_gaussian(model.fc_->fc7.w, std::sqrt(2.0 / model.fc_->fc7.in_dim));
  }
  fill_gaussian(model.fc_tool_.w, 0.01);
  if (model.fc_phase_.has_value()) {
    fill_gaussian(model.fc_phase_->w, 0.01);
  }
  return model;
}

Model Model::zeros(const ModelSpec& spec) {
  spec.validate();
  Model model;
  model.spec_ = spec;
  model.build_layers();
  return model;
}

Model Model::init(const ModelSpec& spec, std::uint64_t seed,
                  const std::optional<std::filesystem::path>& pretrained_backbone) {
  Model model = init(spec, seed);
  if (pretrained_backbone.has_value()) {
    load_backbone_weights(model, *pretrained_backbone);
  }
  return model;
}

void Model::check_input(const Tensor& batch) const {
  const std::vector<int> expected = {batch.rank() == 4 ? batch.dim(0) : -1,
                                     spec_.input_channels, spec_.input_height,
                                     spec_.input_width};
  if (batch.rank() != 4 || batch.dim(0) < 1 || batch.dim(1) != expected[1] ||
      batch.dim(2) != expected[2] || batch.dim(3) != expected[3]) {
    throw ShapeError("batch shape mismatch: expected (N, " +
                     std::to_string(spec_.input_channels) + ", " +
                     std::to_string(spec_.input_height) + ", " +
                     std::to_string(spec_.input_width) + "), got " +
                     shape_string(batch.shape()));
  }
}

namespace {

Tensor subtract_channel_means(const Tensor& batch,
                              const std::array<double, 3>& means) {
  Tensor out = batch;
  const int n = out.dim(0);
  const int c = out.dim(1);
  const std::int64_t plane = static_cast<std::int64_t>(out.dim(2)) * out.dim(3);
  std::int64_t pos = 0;
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const double m = means[static_cast<std::size_t>(ch)];
      for (std::int64_t p = 0; p < plane; ++p) {
        out[pos++] -= m;
      }
    }
  }
  return out;
}

Tensor logistic_of(const Tensor& logits) {
  Tensor out = logits;
  for (std::int64_t i = 0; i < out.size(); ++i) {
    out[i] = stable_logistic(out[i]);
  }
  return out;
}

Tensor concat_columns(const Tensor& a, const Tensor& b) {
  const int n = a.dim(0);
  const int wa = a.dim(1);
  const int wb = b.dim(1);
  Tensor out = Tensor::zeros({n, wa + wb});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < wa; ++j) out.at2(i, j) = a.at2(i, j);
    for (int j = 0; j < wb; ++j) out.at2(i, wa + j) = b.at2(i, j);
  }
  return out;
}

}  // namespace

ForwardBatch Model::forward(const Tensor& batch) const {
  check_input(batch);
  Tensor x = subtract_channel_means(batch, spec_.channel_means);
  for (const Stage& stage : stages_) {
    x = stage.conv.apply(x);
    x = stage.relu.apply(x);
    if (stage.pool.has_value()) x = stage.pool->apply(x);
  }
  x.reshape({batch.dim(0), spec_.flatten_dim()});
  if (fc_.has_value()) {
    x = fc_->fc6.apply(x);
    x = fc_->relu6.apply(x);
    x = fc_->fc7.apply(x);
    x = fc_->relu7.apply(x);
  }

  ForwardBatch out;
  out.features = std::move(x);
  out.tool_logits = fc_tool_.apply(out.features);
  out.tool_confidences = logistic_of(out.tool_logits);
  if (fc_phase_.has_value()) {
    const Tensor& tail = spec_.phase_head_input == PhaseHeadInput::kConfidences
                             ? out.tool_confidences
                             : out.tool_logits;
    out.phase_logits = fc_phase_->apply(concat_columns(out.features, tail));
  }
  return out;
}

ForwardBatch Model::forward_train(const Tensor& batch) {
  check_input(batch);
  Tensor x = subtract_channel_means(batch, spec_.channel_means);
  for (Stage& stage : stages_) {
    x = stage.conv.apply_train(x);
    x = stage.relu.apply_train(x);
    if (stage.pool.has_value()) x = stage.pool->apply_train(x);
  }
  cached_conv_out_shape_ = x.shape();
  x.reshape({batch.dim(0), spec_.flatten_dim()});
  if (fc_.has_value()) {
    x = fc_->fc6.apply_train(x);
    x = fc_->relu6.apply_train(x);
    x = fc_->fc7.apply_train(x);
    x = fc_->relu7.apply_train(x);
  }

  ForwardBatch out;
  out.features = std::move(x);
  out.tool_logits = fc_tool_.apply_train(out.features);
  out.tool_confidences = logistic_of(out.tool_logits);
  cached_confidences_ = out.tool_confidences;
  if (fc_phase_.has_value()) {
    const Tensor& tail = spec_.phase_head_input == PhaseHeadInput::kConfidences
                             ? out.tool_confidences
                             : out.tool_logits;
    out.phase_logits = fc_phase_->apply_train(concat_columns(out.features, tail));
  }
  return out;
}

void Model::backward(const Tensor& d_tool_logits, const Tensor* d_phase_logits) {
  if (cached_conv_out_shape_.empty()) {
    throw Error("backward() requires a preceding forward_train()");
  }
  const int n = cached_conv_out_shape_[0];
  if (d_tool_logits.rank() != 2 || d_tool_logits.dim(0) != n ||
      d_tool_logits.dim(1) != spec_.tool_count) {
    throw ShapeError("tool gradient shape mismatch: expected (" +
                     std::to_string(n) + ", " +
                     std::to_string(spec_.tool_count) + "), got " +
                     shape_string(d_tool_logits.shape()));
  }

  const int feat = spec_.feature_dim();
  Tensor d_features = Tensor::zeros({n, feat});
  Tensor d_tool_total = d_tool_logits;

  if (d_phase_logits != nullptr) {
    if (!fc_phase_.has_value()) {
      throw ShapeError("phase gradient given but the model has no phase head");
    }
    if (d_phase_logits->rank() != 2 || d_phase_logits->dim(0) != n ||
        d_phase_logits->dim(1) != *spec_.phase_count) {
      throw ShapeError("phase gradient shape mismatch: expected (" +
                       std::to_string(n) + ", " +
                       std::to_string(*spec_.phase_count) + "), got " +
                       shape_string(d_phase_logits->shape()));
    }
    const Tensor d_concat = fc_phase_->backward(*d_phase_logits);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < feat; ++j) {
        d_features.at2(i, j) += d_concat.at2(i, j);
      }
      for (int j = 0; j < spec_.tool_count; ++j) {
        double g = d_concat.at2(i, feat + j);
        if (spec_.phase_head_input == PhaseHeadInput::kConfidences) {
          const double c = cached_confidences_.at2(i, j);
          g *= c * (1.0 - c);  // chain through the logistic
        }
        d_tool_total.at2(i, j) += g;
      }
    }
  }

  {
    const Tensor d_feat_from_tool = fc_tool_.backward(d_tool_total);
    for (std::int64_t i = 0; i < d_features.size(); ++i) {
      d_features[i] += d_feat_from_tool[i];
    }
  }

  Tensor g = std::move(d_features);
  if (fc_.has_value()) {
    g = fc_->relu7.backward(g);
    g = fc_->fc7.backward(g);
    g = fc_->relu6.backward(g);
    g = fc_->fc6.backward(g);
  }
  g.reshape(cached_conv_out_shape_);
  for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) {
    if (it->pool.has_value()) g = it->pool->backward(g);
    g = it->relu.backward(g);
    g = it->conv.backward(g);
  }
  // Mean subtraction is a constant shift; the input gradient is discarded.
}

void Model::zero_grads() {
  for (Stage& stage : stages_) stage.conv.zero_grads();
  if (fc_.has_value()) {
    fc_->fc6.zero_grads();
    fc_->fc7.zero_grads();
  }
  fc_tool_.zero_grads();
  if (fc_phase_.has_value()) fc_phase_->zero_grads();
}

std::vector<ParamRef> Model::parameters() {
  std::vector<ParamRef> refs;
  auto add = [&refs](const std::string& name, Linear& l) {
    refs.push_back({name + ".weight", &l.w, &l.gw});
    refs.push_back({name + ".bias", &l.b, &l.gb});
  };
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    const std::string name = "conv" + std::to_string(i + 1);
    refs.push_back({name + ".weight", &stages_[i].conv.w, &stages_[i].conv.gw});
    refs.push_back({name + ".bias", &stages_[i].conv.b, &stages_[i].conv.gb});
  }
  if (fc_.has_value()) {
    add("fc6", fc_->fc6);
    add("fc7", fc_->fc7);
  }
  add("fc_tool", fc_tool_);
  if (fc_phase_.has_value()) add("fc_phase", *fc_phase_);
  return refs;
}

std::vector<std::pair<std::string, const Tensor*>> Model::parameter_values() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  // const_cast is confined to reusing the non-const traversal; values are
  // handed back as const pointers.
  auto refs = const_cast<Model*>(this)->parameters();
  out.reserve(refs.size());
  for (const ParamRef& r : refs) {
    out.emplace_back(r.name, r.value);
  }
  return out;
}

LayerGroups layer_groups(const Model& model) {
  LayerGroups groups;
  for (const auto& [name, tensor] : model.parameter_values()) {
    (void)tensor;
    if (name.rfind("fc_tool.", 0) == 0 || name.rfind("fc_phase.", 0) == 0) {
      groups.new_heads.push_back(name);
    } else {
      groups.backbone.push_back(name);
    }
  }
  return groups;
}

}  // namespace endotool::net
