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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "endotool/errors.hpp"
#include "endotool/net/checkpoint.hpp"
#include "endotool/net/model.hpp"
#include "endotool/rng.hpp"
#include "endotool/tensor.hpp"
#include "support.hpp"

using namespace endotool;
using namespace endotool::net;

namespace {

// One 1x1 conv channel straight into fc_tool: the smallest spec the
// validator accepts, used for hand-computed forward checks.
ModelSpec tiny_linear_spec() {
  ModelSpec spec;
  spec.variant = Variant::kToolNet;
  spec.input_height = 1;
  spec.input_width = 1;
  ConvStageSpec stage;
  stage.out_channels = 1;
  stage.kernel = 1;
  spec.backbone.stages = {stage};
  spec.backbone.fc6_dim = 0;
  spec.backbone.feature_dim = 1;
  return spec;
}

ModelSpec small_spec(Variant variant) {
  ModelSpec spec;
  spec.variant = variant;
  spec.input_height = 16;
  spec.input_width = 16;
  spec.backbone = BackboneSpec::reduced();
  if (variant == Variant::kEndoNet) spec.phase_count = 4;
  return spec;
}

Tensor random_batch(Rng& rng, const ModelSpec& spec, int n) {
  Tensor batch = Tensor::zeros({n, spec.input_channels, spec.input_height,
                                spec.input_width});
  for (std::int64_t i = 0; i < batch.size(); ++i) batch.data()[i] = rng.uniform();
  return batch;
}

bool tensors_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    if (a.data()[i] != b.data()[i]) return false;
  }
  return true;
}

// Numerically stable logistic, written in the usual two-branch form so the
// comparison against model confidences can be exact.
double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

TEST_CASE("init: same seed gives bit-identical parameters") {
  const ModelSpec spec = small_spec(Variant::kEndoNet);
  Model a = Model::init(spec, 42);
  Model b = Model::init(spec, 42);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(tensors_equal(*pa[i].value, *pb[i].value));
  }
  Model c = Model::init(spec, 43);
  CHECK_FALSE(tensors_equal(*a.parameters()[0].value, *c.parameters()[0].value));
}

TEST_CASE("init: ToolNet has no fc_phase parameters") {
  Model m = Model::init(small_spec(Variant::kToolNet), 1);
  for (const auto& p : m.parameters()) {
    CHECK(p.name.find("fc_phase") == std::string::npos);
  }
}

TEST_CASE("expected shapes: EndoNet at feature 4096, P=8 has fc_phase (8, 4103)") {
  ModelSpec spec;
  spec.variant = Variant::kEndoNet;
  spec.backbone = BackboneSpec::alexnet();
  spec.phase_count = 8;
  const auto shapes = expected_parameter_shapes(spec);
  const auto it = std::find_if(shapes.begin(), shapes.end(), [](const NamedShape& s) {
    return s.name == "fc_phase.weight";
  });
  REQUIRE(it != shapes.end());
  CHECK(it->shape == std::vector<int>{8, 4103});
}

TEST_CASE("expected shapes: the full-size backbone arithmetic") {
  ModelSpec spec;
  spec.backbone = BackboneSpec::alexnet();
  CHECK(spec.conv_output_dims() == std::array<int, 3>{256, 6, 6});
  CHECK(spec.flatten_dim() == 9216);
  CHECK(spec.feature_dim() == 4096);
  const auto shapes = expected_parameter_shapes(spec);
  const auto shape_of = [&shapes](const std::string& name) {
    for (const auto& s : shapes) {
      if (s.name == name) return s.shape;
    }
    return std::vector<int>{};
  };
  CHECK(shape_of("conv1.weight") == std::vector<int>{96, 3, 11, 11});
  CHECK(shape_of("conv2.weight") == std::vector<int>{256, 96, 5, 5});
  CHECK(shape_of("conv5.bias") == std::vector<int>{256});
  CHECK(shape_of("fc6.weight") == std::vector<int>{4096, 9216});
  CHECK(shape_of("fc7.weight") == std::vector<int>{4096, 4096});
  CHECK(shape_of("fc_tool.weight") == std::vector<int>{7, 4096});
}

TEST_CASE("forward: batch of 50 gives (50,7) logits and logistic confidences") {
  const ModelSpec spec = small_spec(Variant::kToolNet);
  Model m = Model::init(spec, 3);
  Rng rng(10);
  const Tensor batch = random_batch(rng, spec, 50);
  const ForwardBatch out = m.forward(batch);
  CHECK(out.tool_logits.shape() == std::vector<int>{50, 7});
  CHECK(out.tool_confidences.shape() == std::vector<int>{50, 7});
  CHECK_FALSE(out.phase_logits.has_value());
  for (std::int64_t i = 0; i < out.tool_logits.size(); ++i) {
    const double z = out.tool_logits.data()[i];
    const double c = out.tool_confidences.data()[i];
    CHECK(c == logistic(z));
    CHECK(c > 0.0);
    CHECK(c < 1.0);
  }
}

TEST_CASE("forward: zero tool head gives confidences exactly 0.5") {
  const ModelSpec spec = small_spec(Variant::kToolNet);
  Model m = Model::init(spec, 3);
  for (auto& p : m.parameters()) {
    if (p.name.rfind("fc_tool.", 0) == 0) p.value->fill(0.0);
  }
  Rng rng(4);
  const ForwardBatch out = m.forward(random_batch(rng, spec, 2));
  for (std::int64_t i = 0; i < out.tool_confidences.size(); ++i) {
    CHECK(out.tool_confidences.data()[i] == 0.5);
  }
}

TEST_CASE("forward: confidences stay inside (0,1) at logit magnitude 30") {
  const ModelSpec spec = small_spec(Variant::kToolNet);
  Model m = Model::init(spec, 3);
  for (auto& p : m.parameters()) {
    if (p.name == "fc_tool.weight") p.value->fill(0.0);
    if (p.name == "fc_tool.bias") {
      for (int t = 0; t < 7; ++t) p.value->data()[t] = t % 2 == 0 ? 30.0 : -30.0;
    }
  }
  Rng rng(4);
  const ForwardBatch out = m.forward(random_batch(rng, spec, 1));
  for (int t = 0; t < 7; ++t) {
    const double c = out.tool_confidences.at2(0, t);
    CHECK(c > 0.0);
    CHECK(c < 1.0);
  }
}

TEST_CASE("forward: hand-computed tiny network to 1e-12") {
  Model m = Model::zeros(tiny_linear_spec());
  // conv1: w = (1.0, 0.5, -0.25), b = 0.0625; head row i: w = 0.1(i+1),
  // b = -0.05 i.
  for (auto& p : m.parameters()) {
    if (p.name == "conv1.weight") {
      p.value->data()[0] = 1.0;
      p.value->data()[1] = 0.5;
      p.value->data()[2] = -0.25;
    } else if (p.name == "conv1.bias") {
      p.value->data()[0] = 0.0625;
    } else if (p.name == "fc_tool.weight") {
      for (int i = 0; i < 7; ++i) p.value->data()[i] = 0.1 * (i + 1);
    } else if (p.name == "fc_tool.bias") {
      for (int i = 0; i < 7; ++i) p.value->data()[i] = -0.05 * i;
    }
  }
  Tensor batch = Tensor::zeros({1, 3, 1, 1});
  batch.data()[0] = 0.9;
  batch.data()[1] = 0.4;
  batch.data()[2] = 0.2;
  const ForwardBatch out = m.forward(batch);

  // Mean subtraction centers the pixel at (0.4, -0.1, -0.3); the single conv
  // unit then produces 0.4*1.0 - 0.1*0.5 - 0.3*(-0.25) + 0.0625 = 0.4875.
  const double feature = 0.4875;
  REQUIRE(out.features.shape() == std::vector<int>{1, 1});
  CHECK(out.features.at2(0, 0) == doctest::Approx(feature).epsilon(1e-13));
  for (int i = 0; i < 7; ++i) {
    const double logit = 0.1 * (i + 1) * feature - 0.05 * i;
    CHECK(std::abs(out.tool_logits.at2(0, i) - logit) < 1e-12);
    CHECK(std::abs(out.tool_confidences.at2(0, i) - logistic(logit)) < 1e-12);
  }

  // A pixel driving the unit negative is clamped by the relu: only the head
  // biases survive.
  batch.data()[0] = 0.0;
  batch.data()[1] = 0.5;
  batch.data()[2] = 0.9;
  const ForwardBatch clamped = m.forward(batch);
  CHECK(clamped.features.at2(0, 0) == 0.0);
  for (int i = 0; i < 7; ++i) {
    CHECK(std::abs(clamped.tool_logits.at2(0, i) - (-0.05 * i)) < 1e-12);
  }
}

TEST_CASE("forward: EndoNet phase head consumes features and confidences") {
  ModelSpec spec = tiny_linear_spec();
  spec.variant = Variant::kEndoNet;
  spec.phase_count = 2;
  Model m = Model::zeros(spec);
  for (auto& p : m.parameters()) {
    if (p.name == "conv1.weight") {
      p.value->data()[0] = 1.0;
      p.value->data()[1] = 0.5;
      p.value->data()[2] = -0.25;
    } else if (p.name == "conv1.bias") {
      p.value->data()[0] = 0.0625;
    } else if (p.name == "fc_tool.weight") {
      for (int i = 0; i < 7; ++i) p.value->data()[i] = 0.1 * (i + 1);
    } else if (p.name == "fc_phase.weight") {
      // Row 0 reads the feature alone, row 1 sums the confidences.
      REQUIRE(p.value->shape() == std::vector<int>{2, 8});
      p.value->data()[0] = 1.0;
      for (int j = 1; j < 8; ++j) p.value->data()[8 + j] = 1.0;
    } else if (p.name == "fc_phase.bias") {
      p.value->data()[1] = 0.125;
    }
  }
  Tensor batch = Tensor::zeros({1, 3, 1, 1});
  batch.data()[0] = 0.9;
  batch.data()[1] = 0.4;
  batch.data()[2] = 0.2;
  const ForwardBatch out = m.forward(batch);
  REQUIRE(out.phase_logits.has_value());
  const double feature = 0.4875;
  double conf_sum = 0.0;
  for (int i = 0; i < 7; ++i) conf_sum += logistic(0.1 * (i + 1) * feature);
  CHECK(std::abs(out.phase_logits->at2(0, 0) - feature) < 1e-12);
  CHECK(std::abs(out.phase_logits->at2(0, 1) - (conf_sum + 0.125)) < 1e-12);
}

TEST_CASE("forward: perturbing fc_phase leaves tool outputs unchanged") {
  const ModelSpec spec = small_spec(Variant::kEndoNet);
  Model m = Model::init(spec, 11);
  Rng rng(12);
  const Tensor batch = random_batch(rng, spec, 3);
  const ForwardBatch before = m.forward(batch);
  for (auto& p : m.parameters()) {
    if (p.name.rfind("fc_phase.", 0) == 0) {
      for (std::int64_t i = 0; i < p.value->size(); ++i) p.value->data()[i] += 0.37;
    }
  }
  const ForwardBatch after = m.forward(batch);
  CHECK(tensors_equal(before.tool_logits, after.tool_logits));
  CHECK(tensors_equal(before.tool_confidences, after.tool_confidences));
  CHECK(tensors_equal(before.features, after.features));
  CHECK_FALSE(tensors_equal(*before.phase_logits, *after.phase_logits));
}

TEST_CASE("forward: logits mode feeds raw logits to the phase head") {
  ModelSpec conf_spec = small_spec(Variant::kEndoNet);
  ModelSpec logit_spec = conf_spec;
  logit_spec.phase_head_input = PhaseHeadInput::kLogits;
  Model a = Model::init(conf_spec, 21);
  Model b = Model::init(logit_spec, 21);
  Rng rng(22);
  const Tensor batch = random_batch(rng, conf_spec, 2);
  const ForwardBatch fa = a.forward(batch);
  const ForwardBatch fb = b.forward(batch);
  CHECK(tensors_equal(fa.tool_logits, fb.tool_logits));
  CHECK_FALSE(tensors_equal(*fa.phase_logits, *fb.phase_logits));
}

TEST_CASE("layer_groups: a disjoint exhaustive partition") {
  for (const Variant variant : {Variant::kToolNet, Variant::kEndoNet}) {
    Model m = Model::init(small_spec(variant), 2);
    const LayerGroups groups = layer_groups(m);
    std::set<std::string> heads(groups.new_heads.begin(), groups.new_heads.end());
    std::set<std::string> backbone(groups.backbone.begin(), groups.backbone.end());
    std::set<std::string> expected_heads = {"fc_tool.weight", "fc_tool.bias"};
    if (variant == Variant::kEndoNet) {
      expected_heads.insert("fc_phase.weight");
      expected_heads.insert("fc_phase.bias");
    }
    CHECK(heads == expected_heads);
    std::set<std::string> all;
    for (const auto& p : m.parameters()) all.insert(p.name);
    std::set<std::string> unioned = backbone;
    unioned.insert(heads.begin(), heads.end());
    CHECK(unioned == all);
    for (const auto& name : heads) CHECK(backbone.count(name) == 0);
  }
}

TEST_CASE("shape audit: random valid specs match the arithmetic") {
  Rng rng(77);
  int audited = 0;
  for (int trial = 0; trial < 60; ++trial) {
    ModelSpec spec;
    spec.variant = rng.bernoulli(0.5) ? Variant::kEndoNet : Variant::kToolNet;
    if (spec.variant == Variant::kEndoNet) {
      spec.phase_count = 2 + static_cast<int>(rng.bounded(6));
    }
    spec.input_height = 6 + 2 * static_cast<int>(rng.bounded(6));
    spec.input_width = 6 + 2 * static_cast<int>(rng.bounded(6));
    const int stage_count = 1 + static_cast<int>(rng.bounded(2));
    for (int s = 0; s < stage_count; ++s) {
      ConvStageSpec stage;
      stage.out_channels = 1 + static_cast<int>(rng.bounded(6));
      stage.kernel = 1 + static_cast<int>(rng.bounded(3));
      stage.stride = 1 + static_cast<int>(rng.bounded(2));
      stage.padding = static_cast<int>(rng.bounded(2));
      stage.pool = rng.bernoulli(0.5);
      spec.backbone.stages.push_back(stage);
    }
    if (rng.bernoulli(0.3)) {
      spec.backbone.fc6_dim = 0;
    } else {
      spec.backbone.fc6_dim = 4 + static_cast<int>(rng.bounded(12));
      spec.backbone.feature_dim = 4 + static_cast<int>(rng.bounded(12));
    }
    try {
      if (spec.backbone.fc6_dim == 0) spec.backbone.feature_dim = spec.flatten_dim();
      spec.validate();
    } catch (const ConfigError&) {
      continue;  // degenerate sample (spatial underflow); skip
    }
    ++audited;

    // Independent recomputation of every parameter shape.
    std::vector<NamedShape> expected;
    int c = spec.input_channels, h = spec.input_height, w = spec.input_width;
    int index = 0;
    for (const ConvStageSpec& s : spec.backbone.stages) {
      ++index;
      const std::string base = "conv" + std::to_string(index);
      expected.push_back({base + ".weight", {s.out_channels, c, s.kernel, s.kernel}});
      expected.push_back({base + ".bias", {s.out_channels}});
      h = (h + 2 * s.padding - s.kernel) / s.stride + 1;
      w = (w + 2 * s.padding - s.kernel) / s.stride + 1;
      if (s.pool) {
        h = (h - s.pool_kernel) / s.pool_stride + 1;
        w = (w - s.pool_kernel) / s.pool_stride + 1;
      }
      c = s.out_channels;
    }
    const int flatten = c * h * w;
    int feature = flatten;
    if (spec.backbone.fc6_dim > 0) {
      expected.push_back({"fc6.weight", {spec.backbone.fc6_dim, flatten}});
      expected.push_back({"fc6.bias", {spec.backbone.fc6_dim}});
      expected.push_back({"fc7.weight", {spec.backbone.feature_dim, spec.backbone.fc6_dim}});
      expected.push_back({"fc7.bias", {spec.backbone.feature_dim}});
      feature = spec.backbone.feature_dim;
    }
    expected.push_back({"fc_tool.weight", {7, feature}});
    expected.push_back({"fc_tool.bias", {7}});
    if (spec.variant == Variant::kEndoNet) {
      expected.push_back({"fc_phase.weight", {*spec.phase_count, feature + 7}});
      expected.push_back({"fc_phase.bias", {*spec.phase_count}});
    }
    CHECK(expected_parameter_shapes(spec) == expected);

    Model m = Model::init(spec, 1000 + static_cast<std::uint64_t>(trial));
    const auto params = m.parameters();
    REQUIRE(params.size() == expected.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      CHECK(params[i].name == expected[i].name);
      CHECK(params[i].value->shape() == expected[i].shape);
    }

    const ForwardBatch out = m.forward(random_batch(rng, spec, 2));
    CHECK(out.tool_logits.all_finite());
    CHECK(out.features.all_finite());
    if (out.phase_logits.has_value()) CHECK(out.phase_logits->all_finite());
  }
  CHECK(audited >= 20);
}

TEST_CASE("spec validation rejects contract violations") {
  ModelSpec endo = small_spec(Variant::kEndoNet);
  endo.phase_count.reset();
  CHECK_THROWS_AS(endo.validate(), ConfigError);

  ModelSpec tool = small_spec(Variant::kToolNet);
  tool.phase_count = 8;
  CHECK_THROWS_AS(tool.validate(), ConfigError);

  ModelSpec tiny = small_spec(Variant::kToolNet);
  tiny.input_height = 2;
  tiny.input_width = 2;
  CHECK_THROWS_AS(tiny.validate(), ConfigError);  // spatial underflow

  ModelSpec phase1 = small_spec(Variant::kEndoNet);
  phase1.phase_count = 1;
  CHECK_THROWS_AS(phase1.validate(), ConfigError);
}

TEST_CASE("forward rejects mismatched input shapes") {
  const ModelSpec spec = small_spec(Variant::kToolNet);
  Model m = Model::init(spec, 5);
  const Tensor wrong = Tensor::zeros({2, 3, 8, 8});
  CHECK_THROWS_WITH_AS(static_cast<void>(m.forward(wrong)),
                       doctest::Contains("16"), ShapeError);
}

TEST_CASE("model spec JSON round-trip") {
  ModelSpec spec = small_spec(Variant::kEndoNet);
  spec.phase_head_input = PhaseHeadInput::kLogits;
  spec.channel_means = {0.4, 0.45, 0.5};
  const ModelSpec back = model_spec_from_json(model_spec_to_json(spec));
  CHECK(back == spec);

  const ModelSpec defaults = small_spec(Variant::kToolNet);
  CHECK(model_spec_from_json(model_spec_to_json(defaults)) == defaults);
}

TEST_CASE("checkpoint: save/load round-trips values at float32 precision") {
  testsupport::TempDir tmp;
  const ModelSpec spec = small_spec(Variant::kEndoNet);
  Model m = Model::init(spec, 9);
  const auto path = tmp.path() / "model.ckpt";
  save_checkpoint(m, path);
  Model loaded = load_checkpoint(path);
  CHECK(loaded.spec() == spec);
  const auto orig = m.parameters();
  const auto got = loaded.parameters();
  REQUIRE(orig.size() == got.size());
  for (std::size_t i = 0; i < orig.size(); ++i) {
    CHECK(got[i].name == orig[i].name);
    REQUIRE(got[i].value->shape() == orig[i].value->shape());
    for (std::int64_t j = 0; j < orig[i].value->size(); ++j) {
      // Storage is float32: the loaded value must be exactly the cast.
      const double expected =
          static_cast<double>(static_cast<float>(orig[i].value->data()[j]));
      CHECK(got[i].value->data()[j] == expected);
    }
  }

  // Saving the loaded model again is byte-stable (values already float32).
  const auto path2 = tmp.path() / "model2.ckpt";
  save_checkpoint(loaded, path2);
  CHECK(testsupport::slurp(path) == testsupport::slurp(path2));
}

TEST_CASE("checkpoint: expected-spec validation") {
  testsupport::TempDir tmp;
  const ModelSpec spec = small_spec(Variant::kToolNet);
  Model m = Model::init(spec, 9);
  const auto path = tmp.path() / "tool.ckpt";
  save_checkpoint(m, path);

  CHECK_NOTHROW(static_cast<void>(load_checkpoint(path, spec)));

  // Variant mismatch is a configuration error.
  CHECK_THROWS_AS(static_cast<void>(load_checkpoint(path, small_spec(Variant::kEndoNet))),
                  ConfigError);

  // A shape-changing spec difference is a load error naming the layer.
  ModelSpec wider = spec;
  wider.backbone.feature_dim = 48;
  CHECK_THROWS_WITH_AS(static_cast<void>(load_checkpoint(path, wider)),
                       doctest::Contains("fc7"), LoadError);
}

TEST_CASE("checkpoint: corrupted files are rejected") {
  testsupport::TempDir tmp;
  const auto bogus = tmp.path() / "bogus.ckpt";
  testsupport::spit(bogus, "definitely not a checkpoint");
  CHECK_THROWS_AS(static_cast<void>(load_checkpoint(bogus)), FormatError);

  const ModelSpec spec = small_spec(Variant::kToolNet);
  Model m = Model::init(spec, 9);
  const auto path = tmp.path() / "tool.ckpt";
  save_checkpoint(m, path);
  const std::string full = testsupport::slurp(path);
  const auto truncated = tmp.path() / "short.ckpt";
  testsupport::spit(truncated, full.substr(0, full.size() - 64));
  CHECK_THROWS_AS(static_cast<void>(load_checkpoint(truncated)), FormatError);

  CHECK_THROWS_AS(static_cast<void>(load_checkpoint(tmp.path() / "missing.ckpt")),
                  IoError);
}

TEST_CASE("pretrained backbone: loaded layers match, heads stay fresh") {
  testsupport::TempDir tmp;
  const ModelSpec spec = small_spec(Variant::kToolNet);
  Model source = Model::init(spec, 100);
  const auto path = tmp.path() / "backbone.ckpt";
  save_checkpoint(source, path);

  Model fresh = Model::init(spec, 200);
  Model warm = Model::init(spec, 200, path);
  const auto src = source.parameters();
  const auto fr = fresh.parameters();
  const auto wa = warm.parameters();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    if (wa[i].name.rfind("fc_tool.", 0) == 0) {
      // Heads always come from the seed, never the file.
      CHECK(tensors_equal(*wa[i].value, *fr[i].value));
    } else {
      for (std::int64_t j = 0; j < wa[i].value->size(); ++j) {
        const double expected =
            static_cast<double>(static_cast<float>(src[i].value->data()[j]));
        CHECK(wa[i].value->data()[j] == expected);
      }
    }
  }

  // Shape mismatch names the offending layers.
  ModelSpec other = spec;
  other.input_height = 32;
  other.input_width = 32;
  CHECK_THROWS_WITH_AS(static_cast<void>(Model::init(other, 1, path)),
                       doctest::Contains("fc6.weight"), LoadError);
}
