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

#include "endotool/synth/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "endotool/errors.hpp"
#include "endotool/io/frame_source.hpp"
#include "endotool/io/png_io.hpp"

namespace endotool::synth {

namespace {

// Fixed per-tool glyph colors (RGB): failures stay attributable to a tool.
constexpr std::array<std::array<double, 3>, data::kToolCount> kToolColors = {{
    {1.0, 0.15, 0.15},  // Grasper: red square
    {0.15, 1.0, 0.15},  // Bipolar: green disk
    {0.25, 0.25, 1.0},  // Hook: blue cross
    {1.0, 1.0, 0.1},    // Scissors: yellow diamond
    {1.0, 0.1, 1.0},    // Clipper: magenta ring
    {0.1, 1.0, 1.0},    // Irrigator: cyan triangle
    {1.0, 1.0, 1.0},    // SpecimenBag: white bar
}};

constexpr double kBackground = 0.08;
constexpr int kNoisePixels = 24;

bool glyph_covers(int tool, int dy, int dx, int radius) {
  const double r = radius;
  switch (tool) {
    case 0:  // square
      return std::abs(dy) <= radius && std::abs(dx) <= radius;
    case 1:  // disk
      return dy * dy + dx * dx <= radius * radius;
    case 2:  // cross
      return (std::abs(dy) <= radius && std::abs(dx) <= radius / 3) ||
             (std::abs(dx) <= radius && std::abs(dy) <= radius / 3);
    case 3:  // diamond
      return std::abs(dy) + std::abs(dx) <= radius;
    case 4:  // ring
    {
      const double d2 = dy * dy + dx * dx;
      return d2 <= r * r && d2 >= (r * 0.45) * (r * 0.45);
    }
    case 5:  // downward triangle
      return dy >= -radius && dy <= radius &&
             std::abs(dx) <= (r - dy) * 0.5;
    default:  // horizontal bar
      return std::abs(dy) <= radius / 3 && std::abs(dx) <= radius;
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out.good()) throw IoError("failed writing: " + path.string());
}

}  // namespace

std::array<double, data::kToolCount> SyntheticConfig::effective_priors() const {
  std::array<double, data::kToolCount> priors = tool_priors;
  if (scarcity_profile) {
    priors[3] = 0.02;
    priors[4] = 0.02;
    priors[5] = 0.02;
  }
  return priors;
}

void SyntheticConfig::validate() const {
  if (height < 16 || width < 16) {
    throw ConfigError("synthetic images must be at least 16x16, got " +
                      std::to_string(height) + "x" + std::to_string(width));
  }
  for (int t = 0; t < data::kToolCount; ++t) {
    const double p = tool_priors[static_cast<std::size_t>(t)];
    if (!(p >= 0.0) || !(p <= 1.0)) {
      throw ConfigError("tool prior for " + std::string(data::tool_name(t)) +
                        " must lie in [0, 1]");
    }
  }
  if (phase_count < 1) {
    throw ConfigError("phase_count must be positive, got " +
                      std::to_string(phase_count));
  }
  if (frames_per_video < 1) {
    throw ConfigError("frames_per_video must be positive, got " +
                      std::to_string(frames_per_video));
  }
  if (video_count < 1) {
    throw ConfigError("video_count must be positive, got " +
                      std::to_string(video_count));
  }
}

data::ToolBits sample_labels(Rng& rng,
                             const std::array<double, data::kToolCount>& priors) {
  data::ToolBits bits{};
  for (int t = 0; t < data::kToolCount; ++t) {
    bits[static_cast<std::size_t>(t)] =
        rng.bernoulli(priors[static_cast<std::size_t>(t)]) ? 1 : 0;
  }
  return bits;
}

Tensor render_frame(const SyntheticConfig& config, const data::ToolBits& labels,
                    Rng& rng) {
  const int h = config.height;
  const int w = config.width;
  Tensor image = Tensor::zeros({3, h, w});
  image.fill(kBackground);

  // Sparse speckle noise so the task is not trivially constant.
  for (int k = 0; k < kNoisePixels; ++k) {
    const int y = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(h)));
    const int x = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(w)));
    const double v = kBackground + 0.25 * rng.uniform();
    for (int c = 0; c < 3; ++c) image.at3(c, y, x) = v;
  }

  // Tools live in the first 7 cells of a 3x3 grid; a present tool's glyph is
  // drawn at its cell center plus jitter.
  const int cell_h = h / 3;
  const int cell_w = w / 3;
  const int radius = std::min(cell_h, cell_w) / 3;
  const int jitter_h = std::max(1, cell_h / 6);
  const int jitter_w = std::max(1, cell_w / 6);
  for (int t = 0; t < data::kToolCount; ++t) {
    if (labels[static_cast<std::size_t>(t)] == 0) continue;
    const int row = t / 3;
    const int col = t % 3;
    const int cy = row * cell_h + cell_h / 2 +
                   static_cast<int>(rng.uniform_int(-jitter_h, jitter_h));
    const int cx = col * cell_w + cell_w / 2 +
                   static_cast<int>(rng.uniform_int(-jitter_w, jitter_w));
    const auto& color = kToolColors[static_cast<std::size_t>(t)];
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        if (!glyph_covers(t, dy, dx, radius)) continue;
        const int y = cy + dy;
        const int x = cx + dx;
        if (y < 0 || y >= h || x < 0 || x >= w) continue;
        for (int c = 0; c < 3; ++c) {
          image.at3(c, y, x) = color[static_cast<std::size_t>(c)];
        }
      }
    }
  }
  return image;
}

int phase_of(long frame_index, long frames_per_video, int phase_count) {
  if (frame_index < 0 || frame_index >= frames_per_video) {
    throw ValueError("frame index " + std::to_string(frame_index) +
                     " outside 0.." + std::to_string(frames_per_video - 1));
  }
  const long phase = frame_index * phase_count / frames_per_video;
  return static_cast<int>(std::min<long>(phase, phase_count - 1));
}

data::DatasetManifest generate_dataset(const SyntheticConfig& config,
                                       const std::filesystem::path& out_root) {
  config.validate();
  const auto priors = config.effective_priors();

  std::error_code ec;
  std::filesystem::create_directories(out_root / "annotations", ec);
  if (ec) {
    throw IoError("cannot create output directory " +
                  (out_root / "annotations").string() + ": " + ec.message());
  }

  std::vector<data::FrameRecord> all_records;
  for (int v = 0; v < config.video_count; ++v) {
    char vid[16];
    std::snprintf(vid, sizeof(vid), "video%03d", v + 1);
    const std::string video_id = vid;
    const std::filesystem::path video_dir = out_root / "images" / video_id;
    std::filesystem::create_directories(video_dir, ec);
    if (ec) {
      throw IoError("cannot create output directory " + video_dir.string() +
                    ": " + ec.message());
    }

    Rng rng = Rng::derive(config.seed, static_cast<std::uint64_t>(v));
    std::vector<data::FrameRecord> records;
    records.reserve(static_cast<std::size_t>(config.frames_per_video));
    for (long f = 0; f < config.frames_per_video; ++f) {
      data::FrameRecord rec;
      rec.video_id = video_id;
      rec.frame_index = f;
      rec.tools = sample_labels(rng, priors);
      rec.phase = phase_of(f, config.frames_per_video, config.phase_count);
      const Tensor image = render_frame(config, rec.tools, rng);
      io::write_png_rgb(io::frame_image_path(out_root, video_id, f), image);
      records.push_back(std::move(rec));
    }

    write_file(out_root / "annotations" / (video_id + "_tool.txt"),
               data::serialize_annotations(records));
    write_file(out_root / "annotations" / (video_id + "_phase.txt"),
               data::serialize_phases(records));
    all_records.insert(all_records.end(),
                       std::make_move_iterator(records.begin()),
                       std::make_move_iterator(records.end()));
  }

  nlohmann::json descriptor;
  descriptor["format"] = "endotool-synth-v1";
  descriptor["config"] = {{"height", config.height},
                          {"width", config.width},
                          {"tool_priors", config.tool_priors},
                          {"phase_count", config.phase_count},
                          {"frames_per_video", config.frames_per_video},
                          {"video_count", config.video_count},
                          {"seed", config.seed},
                          {"scarcity_profile", config.scarcity_profile}};
  write_file(out_root / "dataset.json", descriptor.dump(2) + "\n");

  // Assembling re-validates ordering/phase invariants on the way out.
  std::vector<data::PhaseEntry> phases;
  phases.reserve(all_records.size());
  for (const data::FrameRecord& r : all_records) {
    phases.push_back(data::PhaseEntry{r.video_id, r.frame_index, *r.phase});
  }
  std::vector<data::FrameRecord> bare = all_records;
  for (data::FrameRecord& r : bare) r.phase.reset();
  return data::assemble_manifest(std::move(bare), phases);
}

ScarcityStats scarcity_stats(const data::DatasetManifest& manifest) {
  if (manifest.records.empty()) {
    throw EmptyInputError("scarcity_stats: empty manifest");
  }
  ScarcityStats stats;
  for (const data::FrameRecord& r : manifest.records) {
    for (int t = 0; t < data::kToolCount; ++t) {
      stats.positives[static_cast<std::size_t>(t)] +=
          r.tools[static_cast<std::size_t>(t)];
    }
  }
  std::array<int, data::kToolCount> order{};
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&stats](int a, int b) {
    const auto ca = stats.positives[static_cast<std::size_t>(a)];
    const auto cb = stats.positives[static_cast<std::size_t>(b)];
    return ca != cb ? ca < cb : a < b;
  });
  stats.ranking = order;
  return stats;
}

}  // namespace endotool::synth
