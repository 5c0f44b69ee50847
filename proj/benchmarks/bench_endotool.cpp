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

#include <benchmark/benchmark.h>

#include <vector>

#include "endotool/eval/metrics.hpp"
#include "endotool/net/model.hpp"
#include "endotool/rng.hpp"
#include "endotool/synth/synthetic.hpp"
#include "endotool/tensor.hpp"
#include "endotool/train/config.hpp"
#include "endotool/train/losses.hpp"

using namespace endotool;

namespace {

net::ModelSpec reduced_spec(net::Variant variant) {
  net::ModelSpec spec;
  spec.variant = variant;
  spec.backbone = net::BackboneSpec::reduced();
  spec.input_height = 32;
  spec.input_width = 32;
  if (variant == net::Variant::kEndoNet) spec.phase_count = 8;
  return spec;
}

Tensor random_images(Rng& rng, int n, int height, int width) {
  Tensor images = Tensor::zeros({n, 3, height, width});
  for (long i = 0; i < images.size(); ++i) images.data()[i] = rng.uniform();
  return images;
}

void BM_AveragePrecision(benchmark::State& state) {
  const long m = state.range(0);
  Rng rng(1);
  std::vector<double> scores;
  std::vector<int> labels;
  for (long i = 0; i < m; ++i) {
    scores.push_back(rng.uniform());
    labels.push_back(rng.bernoulli(0.3) ? 1 : 0);
  }
  labels[0] = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval::average_precision(
        eval::precision_recall_curve(scores, labels)));
  }
  state.SetItemsProcessed(state.iterations() * m);
}
BENCHMARK(BM_AveragePrecision)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_ReducedForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const net::Model model = net::Model::init(reduced_spec(net::Variant::kToolNet), 3);
  Rng rng(2);
  const Tensor images = random_images(rng, n, 32, 32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward(images));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ReducedForward)->Arg(1)->Arg(16)->Arg(50);

void BM_ReducedTrainStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  net::Model model = net::Model::init(reduced_spec(net::Variant::kToolNet), 4);
  Rng rng(5);
  const Tensor images = random_images(rng, n, 32, 32);
  Tensor labels = Tensor::zeros({n, 7});
  for (long i = 0; i < labels.size(); ++i) {
    labels.data()[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
  }
  for (auto _ : state) {
    model.zero_grads();
    const net::ForwardBatch fwd = model.forward_train(images);
    Tensor d_tool = Tensor::zeros({n, 7});
    benchmark::DoNotOptimize(
        train::tool_loss_with_grad(fwd.tool_logits, labels, d_tool));
    model.backward(d_tool, nullptr);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ReducedTrainStep)->Arg(16)->Arg(50);

void BM_RenderFrame(benchmark::State& state) {
  synth::SyntheticConfig config;
  config.height = static_cast<int>(state.range(0));
  config.width = static_cast<int>(state.range(0));
  data::ToolBits labels = {1, 0, 1, 0, 1, 0, 1};
  Rng rng(6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(synth::render_frame(config, labels, rng));
  }
}
BENCHMARK(BM_RenderFrame)->Arg(32)->Arg(64)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
