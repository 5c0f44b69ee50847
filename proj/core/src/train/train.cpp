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

#include "endotool/train/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "endotool/errors.hpp"
#include "endotool/net/checkpoint.hpp"
#include "endotool/rng.hpp"
#include "endotool/train/losses.hpp"
#include "endotool/version.hpp"

namespace endotool::train {

namespace {

// Distinct RNG streams so that enabling augmentation never changes which
// frames get sampled.
constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kFlipStream = 2;

bool is_head_param(const std::string& name) {
  return name.rfind("fc_tool.", 0) == 0 || name.rfind("fc_phase.", 0) == 0;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void flip_horizontal(Tensor& image) {
  const int c = image.dim(0);
  const int h = image.dim(1);
  const int w = image.dim(2);
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w / 2; ++x) {
        std::swap(image.at3(ch, y, x), image.at3(ch, y, w - 1 - x));
      }
    }
  }
}

nlohmann::json config_to_json(const TrainingConfig& c) {
  nlohmann::json j;
  j["total_iterations"] = c.total_iterations;
  j["batch_size"] = c.batch_size;
  j["base_lr"] = c.base_lr;
  j["head_lr"] = c.head_lr;
  j["decay_factor"] = c.decay_factor;
  j["decay_every"] = c.decay_every;
  j["tool_loss_weight"] = c.tool_loss_weight;
  j["phase_loss_weight"] = c.phase_loss_weight;
  j["seed"] = c.seed;
  if (c.preset.has_value()) {
    j["preset"] = *c.preset;
  } else {
    j["preset"] = nullptr;
  }
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["checkpoint_every"] = c.checkpoint_every;
  j["horizontal_flip"] = c.horizontal_flip;
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out.good()) {
    throw IoError("failed writing: " + path.string());
  }
}

void write_run_metadata(const std::filesystem::path& run_dir,
                        const net::Model& model, const TrainingConfig& config,
                        const TrainingLog& log) {
  nlohmann::json meta;
  meta["toolkit_version"] = std::string(kVersion);
  meta["config"] = config_to_json(config);
  meta["model_spec"] = nlohmann::json::parse(net::model_spec_to_json(model.spec()));
  meta["log_entries"] = log.entries.size();
  if (!log.entries.empty()) {
    double min_total = log.entries.front().loss_total;
    double max_total = min_total;
    for (const LogEntry& e : log.entries) {
      min_total = std::min(min_total, e.loss_total);
      max_total = std::max(max_total, e.loss_total);
    }
    meta["loss_summary"] = {{"first_total", log.entries.front().loss_total},
                            {"last_total", log.entries.back().loss_total},
                            {"min_total", min_total},
                            {"max_total", max_total}};
  }
  nlohmann::json snaps = nlohmann::json::array();
  for (const Snapshot& s : log.snapshots) {
    snaps.push_back({{"iteration", s.iteration}, {"value", s.value}});
  }
  meta["snapshots"] = std::move(snaps);
  write_text_file(run_dir / "run_meta.json", meta.dump(2) + "\n");
}

}  // namespace

std::string training_log_to_tsv(const TrainingLog& log) {
  std::string out =
      "iter\tlr_backbone\tlr_heads\tloss_tool\tloss_phase\tloss_total\n";
  for (const LogEntry& e : log.entries) {
    out += std::to_string(e.iteration);
    out += '\t';
    out += format_double(e.lr_backbone);
    out += '\t';
    out += format_double(e.lr_heads);
    out += '\t';
    out += format_double(e.loss_tool);
    out += '\t';
    out += e.loss_phase.has_value() ? format_double(*e.loss_phase) : "-";
    out += '\t';
    out += format_double(e.loss_total);
    out += '\n';
  }
  return out;
}

TrainingLog train(net::Model& model, const data::DatasetManifest& manifest,
                  const io::FrameSource& frames, const TrainingConfig& config,
                  const TrainOptions& options) {
  config.validate();
  const net::ModelSpec& spec = model.spec();
  if (manifest.records.empty()) {
    throw EmptyInputError("training manifest has no records");
  }

  const bool multi_task = spec.variant == net::Variant::kEndoNet;
  if (multi_task) {
    for (const data::FrameRecord& r : manifest.records) {
      if (!r.phase.has_value()) {
        throw ConfigError("EndoNet training requires a phase label on every "
                          "record; video \"" + r.video_id + "\" frame " +
                          std::to_string(r.frame_index) + " has none");
      }
      if (*r.phase >= *spec.phase_count) {
        throw ConfigError("phase label " + std::to_string(*r.phase) +
                          " (video \"" + r.video_id + "\" frame " +
                          std::to_string(r.frame_index) +
                          ") is outside the model's phase_count " +
                          std::to_string(*spec.phase_count));
      }
    }
  }

  if (options.run_dir.has_value()) {
    std::error_code ec;
    std::filesystem::create_directories(*options.run_dir, ec);
    if (ec) {
      throw IoError("cannot create run directory " + options.run_dir->string() +
                    ": " + ec.message());
    }
  }

  Rng sampler = Rng::derive(config.seed, kSampleStream);
  Rng flipper = Rng::derive(config.seed, kFlipStream);

  std::vector<net::ParamRef> params = model.parameters();
  std::vector<Tensor> velocity;
  velocity.reserve(params.size());
  for (const net::ParamRef& p : params) {
    velocity.push_back(Tensor::zeros(p.value->shape()));
  }

  const long n = config.batch_size;
  Tensor batch = Tensor::zeros(
      {static_cast<int>(n), spec.input_channels, spec.input_height, spec.input_width});
  Tensor labels = Tensor::zeros({static_cast<int>(n), spec.tool_count});
  std::vector<int> phase_labels(static_cast<std::size_t>(n), 0);
  const std::int64_t image_volume = static_cast<std::int64_t>(spec.input_channels) *
                                    spec.input_height * spec.input_width;

  TrainingLog log;
  log.entries.reserve(static_cast<std::size_t>(config.total_iterations));

  for (long iter = 0; iter < config.total_iterations; ++iter) {
    const double lr_backbone = lr_at(iter, LrGroup::kBackbone, config);
    const double lr_heads = lr_at(iter, LrGroup::kNewHeads, config);

    for (long s = 0; s < n; ++s) {
      const std::size_t idx = static_cast<std::size_t>(
          sampler.bounded(manifest.records.size()));
      const data::FrameRecord& rec = manifest.records[idx];
      Tensor image = frames.load(rec.video_id, rec.frame_index);
      if (image.rank() != 3 || image.dim(0) != spec.input_channels ||
          image.dim(1) != spec.input_height || image.dim(2) != spec.input_width) {
        throw ShapeError("frame (video \"" + rec.video_id + "\", frame " +
                         std::to_string(rec.frame_index) +
                         ") does not match the model input " +
                         std::to_string(spec.input_channels) + "x" +
                         std::to_string(spec.input_height) + "x" +
                         std::to_string(spec.input_width));
      }
      if (config.horizontal_flip && flipper.bernoulli(0.5)) {
        flip_horizontal(image);  // presence labels are flip-invariant
      }
      std::copy(image.data(), image.data() + image_volume,
                batch.data() + s * image_volume);
      for (int t = 0; t < spec.tool_count; ++t) {
        labels.at2(static_cast<int>(s), t) = static_cast<double>(rec.tools[static_cast<std::size_t>(t)]);
      }
      if (multi_task) {
        phase_labels[static_cast<std::size_t>(s)] = *rec.phase;
      }
    }

    model.zero_grads();
    const net::ForwardBatch fwd = model.forward_train(batch);

    Tensor d_tool;
    const double loss_tool = tool_loss_with_grad(fwd.tool_logits, labels, d_tool);
    for (std::int64_t i = 0; i < d_tool.size(); ++i) {
      d_tool[i] *= config.tool_loss_weight;
    }

    std::optional<double> loss_phase;
    double loss_total = 0.0;
    if (multi_task) {
      Tensor d_phase;
      loss_phase = phase_loss_with_grad(*fwd.phase_logits, phase_labels, d_phase);
      for (std::int64_t i = 0; i < d_phase.size(); ++i) {
        d_phase[i] *= config.phase_loss_weight;
      }
      loss_total = joint_loss(loss_tool, loss_phase, config);
      if (std::isfinite(loss_total)) {
        model.backward(d_tool, &d_phase);
      }
    } else {
      loss_total = joint_loss(loss_tool, std::nullopt, config);
      if (std::isfinite(loss_total)) {
        model.backward(d_tool, nullptr);
      }
    }

    if (!std::isfinite(loss_total)) {
      std::string msg = "non-finite loss at iteration " + std::to_string(iter) +
                        " (lr_backbone=" + format_double(lr_backbone) +
                        ", lr_heads=" + format_double(lr_heads) +
                        "): loss_tool=" + format_double(loss_tool);
      if (loss_phase.has_value()) {
        msg += ", loss_phase=" + format_double(*loss_phase);
      }
      throw TrainingAbort(msg);
    }

    for (std::size_t p = 0; p < params.size(); ++p) {
      const double lr = is_head_param(params[p].name) ? lr_heads : lr_backbone;
      sgd_update(*params[p].value, *params[p].grad, velocity[p], lr,
                 config.momentum, config.weight_decay);
    }

    log.entries.push_back(LogEntry{iter, lr_backbone, lr_heads, loss_tool,
                                   loss_phase, loss_total});

    const long completed = iter + 1;
    if (options.snapshot_every > 0 && options.snapshot_fn &&
        completed % options.snapshot_every == 0) {
      log.snapshots.push_back(Snapshot{completed, options.snapshot_fn(model, completed)});
    }
    if (options.run_dir.has_value() && config.checkpoint_every > 0 &&
        completed % config.checkpoint_every == 0 &&
        completed < config.total_iterations) {
      net::save_checkpoint(
          model, *options.run_dir / ("checkpoint_" + std::to_string(completed) + ".ckpt"));
    }
  }

  if (options.run_dir.has_value()) {
    net::save_checkpoint(model, *options.run_dir / "final.ckpt");
    write_text_file(*options.run_dir / "train_log.tsv", training_log_to_tsv(log));
    write_run_metadata(*options.run_dir, model, config, log);
  }
  return log;
}

double grad_check(net::Model& model, const LabeledBatch& batch,
                  const TrainingConfig& config, double h) {
  config.validate();
  const bool multi_task = model.spec().variant == net::Variant::kEndoNet;
  if (multi_task && !batch.phase_labels.has_value()) {
    throw ConfigError("grad_check on an EndoNet requires phase labels");
  }

  // Analytic pass.
  model.zero_grads();
  const net::ForwardBatch fwd = model.forward_train(batch.images);
  Tensor d_tool;
  tool_loss_with_grad(fwd.tool_logits, batch.tool_labels, d_tool);
  for (std::int64_t i = 0; i < d_tool.size(); ++i) {
    d_tool[i] *= config.tool_loss_weight;
  }
  if (multi_task) {
    Tensor d_phase;
    phase_loss_with_grad(*fwd.phase_logits, *batch.phase_labels, d_phase);
    for (std::int64_t i = 0; i < d_phase.size(); ++i) {
      d_phase[i] *= config.phase_loss_weight;
    }
    model.backward(d_tool, &d_phase);
  } else {
    model.backward(d_tool, nullptr);
  }

  const auto loss_at = [&]() {
    const net::ForwardBatch out = model.forward(batch.images);
    const double tool = tool_loss(out.tool_logits, batch.tool_labels);
    std::optional<double> phase;
    if (multi_task) {
      phase = phase_loss(*out.phase_logits, *batch.phase_labels);
    }
    return joint_loss(tool, phase, config);
  };

  double max_rel = 0.0;
  for (net::ParamRef& p : model.parameters()) {
    Tensor& value = *p.value;
    const Tensor& grad = *p.grad;
    for (std::int64_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + h;
      const double loss_plus = loss_at();
      value[i] = saved - h;
      const double loss_minus = loss_at();
      value[i] = saved;
      const double numeric = (loss_plus - loss_minus) / (2.0 * h);
      const double analytic = grad[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace endotool::train
