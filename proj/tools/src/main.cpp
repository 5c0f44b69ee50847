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

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "endotool/data/annotations.hpp"
#include "endotool/data/manifest_io.hpp"
#include "endotool/errors.hpp"
#include "endotool/eval/metrics.hpp"
#include "endotool/eval/predictions.hpp"
#include "endotool/io/frame_source.hpp"
#include "endotool/net/checkpoint.hpp"
#include "endotool/net/model.hpp"
#include "endotool/synth/synthetic.hpp"
#include "endotool/train/presets.hpp"
#include "endotool/train/train.hpp"
#include "endotool/version.hpp"

namespace {

namespace fs = std::filesystem;
using namespace endotool;

// ---- Small utilities --------------------------------------------------------

fs::path resolve_out_root(const std::string& out_flag) {
  if (!out_flag.empty()) return fs::path(out_flag);
  if (const char* env = std::getenv("ENDOTOOL_OUT")) {
    if (*env != '\0') return fs::path(env);
  }
  return fs::current_path();
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out.good()) throw IoError("failed writing: " + path.string());
}

long parse_long_or_throw(const std::string& text, const std::string& what) {
  long v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError(what + ": \"" + text + "\" is not an integer");
  }
  return v;
}

double parse_double_or_throw(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError(what + ": \"" + text + "\" is not a number");
  }
  return v;
}

bool parse_bool_or_throw(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(what + ": \"" + text + "\" is not a boolean (true/false)");
}

// ---- Config file (flat key=value, mirroring TrainingConfig fields) ----------

std::vector<std::pair<std::string, std::string>> parse_kv_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::size_t start = 0;
  long line_no = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find('\n', start);
    std::string line = pos == std::string::npos ? text.substr(start)
                                                : text.substr(start, pos - start);
    ++line_no;
    if (pos == std::string::npos && line.empty()) break;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() != '#') {
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config file " + path.string() + " line " +
                          std::to_string(line_no) + ": expected key=value");
      }
      entries.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return entries;
}

void apply_config_entry(train::TrainingConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "total_iterations") {
    cfg.total_iterations = parse_long_or_throw(value, key);
  } else if (key == "batch_size") {
    cfg.batch_size = parse_long_or_throw(value, key);
  } else if (key == "base_lr") {
    cfg.base_lr = parse_double_or_throw(value, key);
  } else if (key == "head_lr") {
    cfg.head_lr = parse_double_or_throw(value, key);
  } else if (key == "decay_factor") {
    cfg.decay_factor = parse_double_or_throw(value, key);
  } else if (key == "decay_every") {
    cfg.decay_every = parse_long_or_throw(value, key);
  } else if (key == "tool_loss_weight") {
    cfg.tool_loss_weight = parse_double_or_throw(value, key);
  } else if (key == "phase_loss_weight") {
    cfg.phase_loss_weight = parse_double_or_throw(value, key);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_long_or_throw(value, key));
  } else if (key == "momentum") {
    cfg.momentum = parse_double_or_throw(value, key);
  } else if (key == "weight_decay") {
    cfg.weight_decay = parse_double_or_throw(value, key);
  } else if (key == "checkpoint_every") {
    cfg.checkpoint_every = parse_long_or_throw(value, key);
  } else if (key == "horizontal_flip") {
    cfg.horizontal_flip = parse_bool_or_throw(value, key);
  } else if (key == "preset") {
    cfg.preset = value;  // applied earlier; recorded here for completeness
  } else {
    throw ConfigError("unknown config key \"" + key + "\"");
  }
}

std::string config_to_kv(const train::TrainingConfig& cfg) {
  char buf[64];
  std::string out;
  const auto add_long = [&out](const char* k, long v) {
    out += std::string(k) + "=" + std::to_string(v) + "\n";
  };
  const auto add_double = [&](const char* k, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += std::string(k) + "=" + buf + "\n";
  };
  add_long("total_iterations", cfg.total_iterations);
  add_long("batch_size", cfg.batch_size);
  add_double("base_lr", cfg.base_lr);
  add_double("head_lr", cfg.head_lr);
  add_double("decay_factor", cfg.decay_factor);
  add_long("decay_every", cfg.decay_every);
  add_double("tool_loss_weight", cfg.tool_loss_weight);
  add_double("phase_loss_weight", cfg.phase_loss_weight);
  out += "seed=" + std::to_string(cfg.seed) + "\n";
  add_double("momentum", cfg.momentum);
  add_double("weight_decay", cfg.weight_decay);
  add_long("checkpoint_every", cfg.checkpoint_every);
  out += std::string("horizontal_flip=") +
         (cfg.horizontal_flip ? "true" : "false") + "\n";
  if (cfg.preset.has_value()) out += "preset=" + *cfg.preset + "\n";
  return out;
}

// ---- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  int height = 64;
  int width = 64;
  long frames = 100;
  int videos = 4;
  int phases = 8;
  std::uint64_t seed = 0;
  bool scarcity = false;
  std::string priors;  // comma-separated override
};

int cmd_synth(const SynthArgs& a) {
  synth::SyntheticConfig cfg;
  cfg.height = a.height;
  cfg.width = a.width;
  cfg.frames_per_video = a.frames;
  cfg.video_count = a.videos;
  cfg.phase_count = a.phases;
  cfg.seed = a.seed;
  cfg.scarcity_profile = a.scarcity;
  if (!a.priors.empty()) {
    std::stringstream ss(a.priors);
    std::string token;
    std::vector<double> values;
    while (std::getline(ss, token, ',')) {
      values.push_back(parse_double_or_throw(token, "--priors"));
    }
    if (values.size() != static_cast<std::size_t>(data::kToolCount)) {
      throw ConfigError("--priors needs exactly 7 comma-separated values, got " +
                        std::to_string(values.size()));
    }
    std::copy(values.begin(), values.end(), cfg.tool_priors.begin());
  }

  const fs::path out_root = resolve_out_root(a.out);
  const data::DatasetManifest manifest = synth::generate_dataset(cfg, out_root);
  data::save_manifest(manifest, out_root / "manifest.json");

  std::cout << "dataset\t" << out_root.string() << "\n"
            << "videos\t" << manifest.videos.size() << "\n"
            << "frames\t" << manifest.records.size() << "\n";
  return 0;
}

// ---- ingest -----------------------------------------------------------------

struct IngestArgs {
  std::string annotations;
  std::string out;
  std::string manifest_out;
  std::string fps = "1";
  bool stats = false;
};

data::Rational parse_fps(const std::string& text) {
  const std::size_t slash = text.find('/');
  data::Rational fps;
  if (slash == std::string::npos) {
    fps.num = parse_long_or_throw(text, "--fps");
    fps.den = 1;
  } else {
    fps.num = parse_long_or_throw(text.substr(0, slash), "--fps numerator");
    fps.den = parse_long_or_throw(text.substr(slash + 1), "--fps denominator");
  }
  return fps;
}

int cmd_ingest(const IngestArgs& a) {
  const data::DiscoveredAnnotations found = data::discover_annotations(a.annotations);
  const data::DatasetManifest manifest =
      data::build_manifest(found.tool_files, found.phase_files, parse_fps(a.fps));

  const fs::path out_path = a.manifest_out.empty()
                                ? resolve_out_root(a.out) / "manifest.json"
                                : fs::path(a.manifest_out);
  data::save_manifest(manifest, out_path);

  std::cout << "manifest\t" << out_path.string() << "\n"
            << "videos\t" << manifest.videos.size() << "\n"
            << "frames\t" << manifest.records.size() << "\n";
  if (manifest.phase_count.has_value()) {
    std::cout << "phases\t" << *manifest.phase_count << "\n";
  }
  if (a.stats) {
    const data::ClassFrequency freq = data::class_frequency(manifest);
    char buf[32];
    std::cout << "tool\tpositives\tfraction\n";
    for (int t = 0; t < data::kToolCount; ++t) {
      const auto& f = freq.per_tool[static_cast<std::size_t>(t)];
      std::snprintf(buf, sizeof(buf), "%.6f", f.fraction);
      std::cout << data::tool_name(t) << "\t" << f.positives << "\t" << buf
                << "\n";
    }
  }
  return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string manifest;
  std::string data_root;
  std::string out;
  std::string run_name = "run";
  std::string preset;
  std::string config_file;
  std::string variant;
  std::string backbone = "alexnet";
  int input_height = 0;  // 0 = default for the backbone
  int input_width = 0;
  int phases = 0;  // 0 = manifest/preset default
  std::string pretrained;
  // Overrides; presence detected via CLI11 option counts.
  long iters = 0;
  long batch = 0;
  double base_lr = 0.0;
  double head_lr = 0.0;
  double decay_factor = 0.0;
  long decay_every = 0;
  double tool_weight = 0.0;
  double phase_weight = 0.0;
  long seed = 0;
  double momentum = 0.0;
  double weight_decay = 0.0;
  long checkpoint_every = 0;
  bool flip = false;
};

net::BackboneSpec backbone_by_name(const std::string& name) {
  if (name == "alexnet") return net::BackboneSpec::alexnet();
  if (name == "reduced") return net::BackboneSpec::reduced();
  throw ConfigError("unknown backbone \"" + name + "\" (alexnet|reduced)");
}

int cmd_train(const TrainArgs& a, const CLI::App* sub) {
  // Precedence: defaults < preset < config file < flags.
  train::TrainingConfig cfg;
  std::optional<train::RunPreset> preset;

  std::vector<std::pair<std::string, std::string>> file_entries;
  if (!a.config_file.empty()) file_entries = parse_kv_file(a.config_file);

  std::string preset_name = a.preset;
  if (preset_name.empty()) {
    for (const auto& [k, v] : file_entries) {
      if (k == "preset") preset_name = v;
    }
  }
  if (!preset_name.empty()) {
    preset = train::preset_by_name(preset_name);
    if (!preset.has_value()) {
      throw ConfigError("unknown preset \"" + preset_name + "\"");
    }
    cfg = preset->config;
  }
  for (const auto& [k, v] : file_entries) {
    apply_config_entry(cfg, k, v);
  }
  if (sub->count("--iters")) cfg.total_iterations = a.iters;
  if (sub->count("--batch")) cfg.batch_size = a.batch;
  if (sub->count("--base-lr")) cfg.base_lr = a.base_lr;
  if (sub->count("--head-lr")) cfg.head_lr = a.head_lr;
  if (sub->count("--decay-factor")) cfg.decay_factor = a.decay_factor;
  if (sub->count("--decay-every")) cfg.decay_every = a.decay_every;
  if (sub->count("--tool-weight")) cfg.tool_loss_weight = a.tool_weight;
  if (sub->count("--phase-weight")) cfg.phase_loss_weight = a.phase_weight;
  if (sub->count("--seed")) cfg.seed = static_cast<std::uint64_t>(a.seed);
  if (sub->count("--momentum")) cfg.momentum = a.momentum;
  if (sub->count("--weight-decay")) cfg.weight_decay = a.weight_decay;
  if (sub->count("--checkpoint-every")) cfg.checkpoint_every = a.checkpoint_every;
  if (sub->count("--flip")) cfg.horizontal_flip = a.flip;
  cfg.validate();

  // Variant: the preset fixes it; an explicit flag must agree.
  net::Variant variant = net::Variant::kToolNet;
  if (preset.has_value()) {
    variant = preset->variant;
    if (!a.variant.empty()) {
      const auto v = net::variant_from_name(a.variant);
      if (!v.has_value()) throw ConfigError("unknown variant \"" + a.variant + "\"");
      if (*v != variant) {
        throw ConfigError("--variant " + a.variant + " conflicts with preset " +
                          preset->name);
      }
    }
  } else if (!a.variant.empty()) {
    const auto v = net::variant_from_name(a.variant);
    if (!v.has_value()) throw ConfigError("unknown variant \"" + a.variant + "\"");
    variant = *v;
  }

  const data::DatasetManifest manifest = data::load_manifest(a.manifest);
  const fs::path data_root =
      a.data_root.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.data_root);

  net::ModelSpec spec;
  spec.variant = variant;
  spec.backbone = backbone_by_name(a.backbone);
  const int default_hw = a.backbone == "alexnet" ? 227 : 64;
  spec.input_height = a.input_height > 0 ? a.input_height : default_hw;
  spec.input_width = a.input_width > 0 ? a.input_width : default_hw;
  if (variant == net::Variant::kEndoNet) {
    int phase_count = preset.has_value() ? preset->default_phase_count : 8;
    if (manifest.phase_count.has_value()) phase_count = *manifest.phase_count;
    if (a.phases > 0) phase_count = a.phases;
    spec.phase_count = phase_count;
  } else if (a.phases > 0) {
    throw ConfigError("--phases only applies to EndoNet runs");
  }
  spec.validate();

  const fs::path run_dir = resolve_out_root(a.out) / a.run_name;
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  if (ec) {
    throw IoError("cannot create run directory " + run_dir.string() + ": " +
                  ec.message());
  }
  write_text_file(run_dir / "resolved_config.txt", config_to_kv(cfg));

  std::optional<fs::path> pretrained;
  if (!a.pretrained.empty()) pretrained = fs::path(a.pretrained);
  net::Model model = net::Model::init(spec, cfg.seed, pretrained);

  const io::DirectoryFrameSource frames(data_root);
  train::TrainOptions options;
  options.run_dir = run_dir;
  const train::TrainingLog log = train::train(model, manifest, frames, cfg, options);

  std::cout << "run\t" << run_dir.string() << "\n"
            << "iterations\t" << log.entries.size() << "\n"
            << "final_loss\t";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", log.entries.back().loss_total);
  std::cout << buf << "\n";
  return 0;
}

// ---- predict ----------------------------------------------------------------

struct PredictArgs {
  std::string checkpoint;
  std::string manifest;
  std::string data_root;
  std::string out;
  std::string variant;
  std::string thresholds;
};

std::array<double, data::kToolCount> parse_thresholds(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    values.push_back(parse_double_or_throw(token, "--thresholds"));
  }
  std::array<double, data::kToolCount> out{};
  if (values.size() == 1) {
    out.fill(values[0]);
  } else if (values.size() == static_cast<std::size_t>(data::kToolCount)) {
    std::copy(values.begin(), values.end(), out.begin());
  } else {
    throw ConfigError("--thresholds needs 1 or 7 comma-separated values, got " +
                      std::to_string(values.size()));
  }
  return out;
}

int cmd_predict(const PredictArgs& a) {
  net::Model model = net::load_checkpoint(a.checkpoint);
  if (!a.variant.empty()) {
    const auto v = net::variant_from_name(a.variant);
    if (!v.has_value()) throw ConfigError("unknown variant \"" + a.variant + "\"");
    if (model.spec().variant != *v) {
      throw ConfigError("checkpoint " + a.checkpoint + " holds a " +
                        std::string(net::variant_name(model.spec().variant)) +
                        " but --variant requested " + a.variant);
    }
  }
  const net::ModelSpec& spec = model.spec();

  const data::DatasetManifest manifest = data::load_manifest(a.manifest);
  const fs::path data_root =
      a.data_root.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.data_root);
  const io::DirectoryFrameSource frames(data_root);

  std::optional<std::array<double, data::kToolCount>> thresholds;
  if (!a.thresholds.empty()) thresholds = parse_thresholds(a.thresholds);

  const fs::path pred_dir =
      a.out.empty() ? resolve_out_root(a.out) / "predictions" : fs::path(a.out);
  std::error_code ec;
  fs::create_directories(pred_dir, ec);
  if (ec) {
    throw IoError("cannot create " + pred_dir.string() + ": " + ec.message());
  }

  constexpr long kChunk = 64;
  long files = 0;
  for (const std::string& video : manifest.videos) {
    const std::vector<data::FrameRecord> records =
        data::records_for_video(manifest, video);
    std::vector<eval::FramePrediction> preds;
    preds.reserve(records.size());
    std::vector<data::FrameRecord> decisions;

    for (std::size_t begin = 0; begin < records.size(); begin += kChunk) {
      const std::size_t end = std::min(records.size(), begin + kChunk);
      Tensor batch = Tensor::zeros({static_cast<int>(end - begin),
                                    spec.input_channels, spec.input_height,
                                    spec.input_width});
      const std::int64_t volume = static_cast<std::int64_t>(spec.input_channels) *
                                  spec.input_height * spec.input_width;
      for (std::size_t i = begin; i < end; ++i) {
        const Tensor image = frames.load(records[i].video_id, records[i].frame_index);
        if (image.rank() != 3 || image.dim(0) != spec.input_channels ||
            image.dim(1) != spec.input_height || image.dim(2) != spec.input_width) {
          throw ShapeError("frame (video \"" + records[i].video_id +
                           "\", frame " + std::to_string(records[i].frame_index) +
                           ") does not match the checkpoint input " +
                           std::to_string(spec.input_channels) + "x" +
                           std::to_string(spec.input_height) + "x" +
                           std::to_string(spec.input_width));
        }
        std::copy(image.data(), image.data() + volume,
                  batch.data() + static_cast<std::int64_t>(i - begin) * volume);
      }
      const net::ForwardBatch fwd = model.forward(batch);
      for (std::size_t i = begin; i < end; ++i) {
        eval::FramePrediction p;
        p.video_id = video;
        p.frame_index = records[i].frame_index;
        for (int t = 0; t < data::kToolCount; ++t) {
          p.confidences[static_cast<std::size_t>(t)] =
              fwd.tool_confidences.at2(static_cast<int>(i - begin), t);
        }
        if (thresholds.has_value()) {
          const eval::ToolPresenceDecision d =
              eval::apply_thresholds(p.confidences, *thresholds);
          data::FrameRecord rec;
          rec.video_id = video;
          rec.frame_index = p.frame_index;
          rec.tools = d.present;
          decisions.push_back(std::move(rec));
        }
        preds.push_back(std::move(p));
      }
    }

    eval::write_prediction_file(pred_dir, video, preds);
    ++files;
    if (thresholds.has_value()) {
      write_text_file(pred_dir / (video + "_decisions.txt"),
                      data::serialize_annotations(decisions));
    }
  }

  std::cout << "predictions\t" << pred_dir.string() << "\n"
            << "files\t" << files << "\n";
  return 0;
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string pred;
  std::string manifest;
  std::string out;
  std::string ap_method = "envelope";
  std::string from_ap_file;
};

std::array<std::optional<double>, data::kToolCount> parse_ap_file(
    const fs::path& path) {
  const std::string text = read_text_file(path);
  std::array<std::optional<double>, data::kToolCount> values;
  int next = 0;
  std::stringstream ss(text);
  std::string line;
  long line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (next >= data::kToolCount) {
      throw FormatError("AP file " + path.string() + " line " +
                        std::to_string(line_no) + ": more than 7 values");
    }
    std::stringstream fields(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (fields >> tok) tokens.push_back(tok);
    std::string value_token;
    if (tokens.size() == 1) {
      value_token = tokens[0];
    } else if (tokens.size() == 2) {
      if (tokens[0] != data::tool_name(next)) {
        throw FormatError("AP file " + path.string() + " line " +
                          std::to_string(line_no) + ": expected tool \"" +
                          std::string(data::tool_name(next)) + "\", got \"" +
                          tokens[0] + "\"");
      }
      value_token = tokens[1];
    } else {
      throw FormatError("AP file " + path.string() + " line " +
                        std::to_string(line_no) +
                        ": expected `<value>` or `<Tool> <value>`");
    }
    values[static_cast<std::size_t>(next)] =
        parse_double_or_throw(value_token, "AP value");
    ++next;
  }
  if (next != data::kToolCount) {
    throw ArityError("AP file " + path.string() + " has " +
                     std::to_string(next) + " values, expected 7");
  }
  return values;
}

int cmd_evaluate(const EvaluateArgs& a) {
  const fs::path out_root = resolve_out_root(a.out);
  std::error_code ec;
  fs::create_directories(out_root, ec);
  if (ec) {
    throw IoError("cannot create " + out_root.string() + ": " + ec.message());
  }

  if (!a.from_ap_file.empty()) {
    // Render the aggregation directly from 7 per-tool AP values in percent.
    const auto values = parse_ap_file(a.from_ap_file);
    const std::string table = eval::render_ap_table(values);
    write_text_file(out_root / "report.txt", table);
    std::cout << table;
    return 0;
  }

  if (a.pred.empty() || a.manifest.empty()) {
    throw ConfigError("evaluate needs --pred and --manifest (or --from-ap-file)");
  }
  eval::ApMethod method = eval::ApMethod::kEnvelope;
  if (a.ap_method == "trapezoid") {
    method = eval::ApMethod::kTrapezoid;
  } else if (a.ap_method != "envelope") {
    throw ConfigError("unknown --ap-method \"" + a.ap_method +
                      "\" (envelope|trapezoid)");
  }

  const data::DatasetManifest truth = data::load_manifest(a.manifest);
  const std::vector<eval::FramePrediction> predictions =
      eval::read_prediction_dir(a.pred);
  eval::EvaluationReport report = eval::evaluate(predictions, truth, method);
  report.metadata["predictions"] = a.pred;
  report.metadata["manifest"] = a.manifest;

  for (const std::string& w : report.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  const std::string table = eval::render_report(report);
  write_text_file(out_root / "report.txt", table);
  write_text_file(out_root / "summary.tsv", eval::report_summary_tsv(report));
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"endotool: frame-level surgical tool presence toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "Generate a deterministic synthetic dataset");
  synth_cmd->add_option("--out", synth_args.out,
                        "Output root (default: $ENDOTOOL_OUT or cwd)");
  synth_cmd->add_option("--height", synth_args.height, "Image height");
  synth_cmd->add_option("--width", synth_args.width, "Image width");
  synth_cmd->add_option("--frames", synth_args.frames, "Frames per video");
  synth_cmd->add_option("--videos", synth_args.videos, "Video count");
  synth_cmd->add_option("--phases", synth_args.phases, "Phase count");
  synth_cmd->add_option("--seed", synth_args.seed, "RNG seed");
  synth_cmd->add_flag("--scarcity", synth_args.scarcity,
                      "Make Scissors/Clipper/Irrigator rare");
  synth_cmd->add_option("--priors", synth_args.priors,
                        "7 comma-separated presence priors");

  IngestArgs ingest_args;
  CLI::App* ingest_cmd = app.add_subcommand(
      "ingest", "Parse annotation files into a validated manifest");
  ingest_cmd->add_option("--annotations", ingest_args.annotations,
                         "Directory of *_tool.txt / *_phase.txt files")
      ->required();
  ingest_cmd->add_option("--out", ingest_args.out,
                         "Output root (default: $ENDOTOOL_OUT or cwd)");
  ingest_cmd->add_option("--manifest-out", ingest_args.manifest_out,
                         "Manifest path (default: <out>/manifest.json)");
  ingest_cmd->add_option("--fps", ingest_args.fps,
                         "Sampling rate as N or N/D (default 1)");
  ingest_cmd->add_flag("--stats", ingest_args.stats,
                       "Print per-tool frequency table");

  TrainArgs train_args;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Fine-tune a model on a manifest");
  train_cmd->add_option("--manifest", train_args.manifest, "Manifest JSON file")
      ->required();
  train_cmd->add_option("--data-root", train_args.data_root,
                        "Dataset root holding images/ (default: manifest dir)");
  train_cmd->add_option("--out", train_args.out,
                        "Output root (default: $ENDOTOOL_OUT or cwd)");
  train_cmd->add_option("--run-name", train_args.run_name,
                        "Run directory name under --out");
  train_cmd->add_option("--preset", train_args.preset,
                        "ToolNet-m2cai16 | ToolNet-Cholec80 | EndoNet-Cholec80");
  train_cmd->add_option("--config", train_args.config_file,
                        "key=value config file");
  train_cmd->add_option("--variant", train_args.variant, "ToolNet | EndoNet");
  train_cmd->add_option("--backbone", train_args.backbone, "alexnet | reduced");
  train_cmd->add_option("--input-height", train_args.input_height,
                        "Input height (default 227 alexnet / 64 reduced)");
  train_cmd->add_option("--input-width", train_args.input_width,
                        "Input width (default 227 alexnet / 64 reduced)");
  train_cmd->add_option("--phases", train_args.phases,
                        "Phase count (EndoNet; default from manifest)");
  train_cmd->add_option("--pretrained", train_args.pretrained,
                        "Checkpoint supplying backbone weights");
  train_cmd->add_option("--iters", train_args.iters, "Total iterations");
  train_cmd->add_option("--batch", train_args.batch, "Batch size");
  train_cmd->add_option("--base-lr", train_args.base_lr, "Backbone lr");
  train_cmd->add_option("--head-lr", train_args.head_lr, "New-head lr");
  train_cmd->add_option("--decay-factor", train_args.decay_factor, "LR decay factor");
  train_cmd->add_option("--decay-every", train_args.decay_every,
                        "Iterations between decays");
  train_cmd->add_option("--tool-weight", train_args.tool_weight, "Tool loss weight");
  train_cmd->add_option("--phase-weight", train_args.phase_weight,
                        "Phase loss weight");
  train_cmd->add_option("--seed", train_args.seed, "RNG seed");
  train_cmd->add_option("--momentum", train_args.momentum, "SGD momentum");
  train_cmd->add_option("--weight-decay", train_args.weight_decay, "Weight decay");
  train_cmd->add_option("--checkpoint-every", train_args.checkpoint_every,
                        "Checkpoint period in iterations");
  train_cmd->add_flag("--flip", train_args.flip, "Random horizontal flip");

  PredictArgs predict_args;
  CLI::App* predict_cmd = app.add_subcommand(
      "predict", "Write per-video tool confidence files from a checkpoint");
  predict_cmd->add_option("--checkpoint", predict_args.checkpoint, "Checkpoint file")
      ->required();
  predict_cmd->add_option("--manifest", predict_args.manifest, "Manifest JSON file")
      ->required();
  predict_cmd->add_option("--data-root", predict_args.data_root,
                          "Dataset root holding images/ (default: manifest dir)");
  predict_cmd->add_option(
      "--out", predict_args.out,
      "Prediction directory (default: predictions/ under $ENDOTOOL_OUT or cwd)");
  predict_cmd->add_option("--variant", predict_args.variant,
                          "Assert the checkpoint variant (ToolNet | EndoNet)");
  predict_cmd->add_option("--thresholds", predict_args.thresholds,
                          "1 or 7 comma-separated cutoffs; also writes "
                          "decision files");

  EvaluateArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand(
      "evaluate", "Score predictions against a manifest (mAP)");
  eval_cmd->add_option("--pred", eval_args.pred, "Directory of *_pred.txt files");
  eval_cmd->add_option("--manifest", eval_args.manifest, "Truth manifest");
  eval_cmd->add_option("--out", eval_args.out,
                       "Output root (default: $ENDOTOOL_OUT or cwd)");
  eval_cmd->add_option("--ap-method", eval_args.ap_method,
                       "envelope (default) | trapezoid");
  eval_cmd->add_option("--from-ap-file", eval_args.from_ap_file,
                       "Render the table from 7 per-tool AP percentages");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth_args);
    if (ingest_cmd->parsed()) return cmd_ingest(ingest_args);
    if (train_cmd->parsed()) return cmd_train(train_args, train_cmd);
    if (predict_cmd->parsed()) return cmd_predict(predict_args);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_args);
  } catch (const CoverageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
