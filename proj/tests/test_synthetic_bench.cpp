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
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "endotool/data/annotations.hpp"
#include "endotool/errors.hpp"
#include "endotool/rng.hpp"
#include "endotool/synth/synthetic.hpp"
#include "endotool/tensor.hpp"
#include "support.hpp"

using namespace endotool;
using namespace endotool::synth;

namespace {

// Relative-path -> file-bytes map of a directory tree.
std::map<std::string, std::string> tree_bytes(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    out[std::filesystem::relative(entry.path(), root).generic_string()] =
        testsupport::slurp(entry.path());
  }
  return out;
}

SyntheticConfig small_config() {
  SyntheticConfig config;
  config.height = 32;
  config.width = 32;
  config.frames_per_video = 20;
  config.video_count = 2;
  config.seed = 1234;
  return config;
}

}  // namespace

TEST_CASE("generate_dataset: same seed reproduces every byte") {
  testsupport::TempDir tmp;
  const SyntheticConfig config = small_config();
  const data::DatasetManifest first = generate_dataset(config, tmp.path() / "a");
  const data::DatasetManifest second = generate_dataset(config, tmp.path() / "b");
  CHECK(first == second);

  const auto bytes_a = tree_bytes(tmp.path() / "a");
  const auto bytes_b = tree_bytes(tmp.path() / "b");
  REQUIRE(bytes_a.size() == bytes_b.size());
  CHECK(bytes_a.size() > 0);
  for (const auto& [rel, data] : bytes_a) {
    REQUIRE(bytes_b.count(rel) == 1);
    CHECK(bytes_b.at(rel) == data);
  }

  // A different seed must actually change the dataset.
  SyntheticConfig other = config;
  other.seed = 1235;
  const data::DatasetManifest third = generate_dataset(other, tmp.path() / "c");
  CHECK_FALSE(first == third);
}

TEST_CASE("generate_dataset: layout and format compliance") {
  testsupport::TempDir tmp;
  const SyntheticConfig config = small_config();
  const data::DatasetManifest manifest = generate_dataset(config, tmp.path());

  CHECK(manifest.videos == std::vector<std::string>{"video001", "video002"});
  CHECK(manifest.records.size() == 40);
  REQUIRE(manifest.phase_count.has_value());
  CHECK(*manifest.phase_count == config.phase_count);

  for (const std::string& video : manifest.videos) {
    const auto tool_path = tmp.path() / "annotations" / (video + "_tool.txt");
    const auto phase_path = tmp.path() / "annotations" / (video + "_phase.txt");
    REQUIRE(std::filesystem::exists(tool_path));
    REQUIRE(std::filesystem::exists(phase_path));

    // The emitted files re-parse, and agree with the returned manifest.
    const auto parsed = data::parse_annotation_file(tool_path, video);
    const auto phases = data::parse_phase_file(phase_path, video);
    REQUIRE(parsed.size() == 20);
    REQUIRE(phases.size() == 20);
    std::size_t offset = video == "video001" ? 0 : 20;
    for (std::size_t f = 0; f < parsed.size(); ++f) {
      const data::FrameRecord& rec = manifest.records[offset + f];
      CHECK(parsed[f].tools == rec.tools);
      CHECK(parsed[f].frame_index == rec.frame_index);
      CHECK(phases[f].phase == rec.phase.value());
    }

    for (long f = 0; f < config.frames_per_video; ++f) {
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%07ld.png", f);
      CHECK(std::filesystem::exists(tmp.path() / "images" / video / name));
    }
  }
  CHECK(std::filesystem::exists(tmp.path() / "dataset.json"));
}

TEST_CASE("sample_labels: degenerate priors") {
  Rng rng(7);
  std::array<double, 7> zeros{};
  std::array<double, 7> ones;
  ones.fill(1.0);
  for (int i = 0; i < 100; ++i) {
    const data::ToolBits none = sample_labels(rng, zeros);
    for (int t = 0; t < 7; ++t) CHECK(none[static_cast<std::size_t>(t)] == 0);
    const data::ToolBits all = sample_labels(rng, ones);
    for (int t = 0; t < 7; ++t) CHECK(all[static_cast<std::size_t>(t)] == 1);
  }
}

TEST_CASE("sample_labels: empirical rate matches the prior") {
  Rng rng(8);
  std::array<double, 7> priors;
  priors.fill(0.5);
  std::array<long, 7> counts{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const data::ToolBits bits = sample_labels(rng, priors);
    for (int t = 0; t < 7; ++t) counts[static_cast<std::size_t>(t)] += bits[static_cast<std::size_t>(t)];
  }
  for (int t = 0; t < 7; ++t) {
    const double rate = static_cast<double>(counts[static_cast<std::size_t>(t)]) / n;
    CHECK(std::abs(rate - 0.5) < 0.02);
  }
}

TEST_CASE("sample_labels: always consumes exactly seven draws") {
  std::array<double, 7> zeros{};
  std::array<double, 7> mixed = {0.0, 1.0, 0.3, 0.9, 0.5, 0.1, 0.7};

  Rng a(555);
  Rng b(555);
  Rng c(555);
  static_cast<void>(sample_labels(a, zeros));
  static_cast<void>(sample_labels(b, mixed));
  for (int i = 0; i < 7; ++i) static_cast<void>(c.uniform());

  // All three streams are now in the same state.
  for (int i = 0; i < 10; ++i) {
    const std::uint64_t expected = c.next_u64();
    CHECK(a.next_u64() == expected);
    CHECK(b.next_u64() == expected);
  }
}

TEST_CASE("phase_of: floor segmentation") {
  const long frames = 100;
  const int phase_count = 8;
  CHECK(phase_of(0, frames, phase_count) == 0);
  CHECK(phase_of(frames - 1, frames, phase_count) == phase_count - 1);

  std::set<int> seen;
  int prev = 0;
  for (long f = 0; f < frames; ++f) {
    const int p = phase_of(f, frames, phase_count);
    CHECK(p == static_cast<int>(f * phase_count / frames));  // independent formula
    CHECK(p >= prev);  // non-decreasing along the video
    prev = p;
    seen.insert(p);
  }
  CHECK(seen.size() == static_cast<std::size_t>(phase_count));  // onto

  // Video shorter than the phase count still starts at 0 and stays in range.
  for (long f = 0; f < 3; ++f) {
    const int p = phase_of(f, 3, 8);
    CHECK(p >= 0);
    CHECK(p < 8);
  }
  CHECK(phase_of(0, 3, 8) == 0);
}

TEST_CASE("scarcity profile: tools 3-5 become the rarest") {
  SyntheticConfig config;
  config.scarcity_profile = true;
  const std::array<double, 7> priors = config.effective_priors();
  CHECK(priors[3] == 0.02);
  CHECK(priors[4] == 0.02);
  CHECK(priors[5] == 0.02);
  CHECK(priors[0] == 0.4);

  Rng rng(9);
  std::vector<data::FrameRecord> records;
  for (int i = 0; i < 5000; ++i) {
    data::FrameRecord rec;
    rec.video_id = "v";
    rec.frame_index = i;
    rec.tools = sample_labels(rng, priors);
    records.push_back(std::move(rec));
  }
  const data::DatasetManifest manifest = data::assemble_manifest(std::move(records), {});
  const ScarcityStats stats = scarcity_stats(manifest);
  const std::set<int> rarest = {stats.ranking[0], stats.ranking[1], stats.ranking[2]};
  CHECK(rarest == std::set<int>{3, 4, 5});
  for (int t : {3, 4, 5}) {
    CHECK(stats.positives[static_cast<std::size_t>(t)] > 0);
    CHECK(stats.positives[static_cast<std::size_t>(t)] < 400);
  }
  for (int t : {0, 1, 2, 6}) {
    CHECK(stats.positives[static_cast<std::size_t>(t)] > 1000);
  }
}

TEST_CASE("scarcity_stats: ranking is ascending with ties by index") {
  std::vector<data::FrameRecord> records;
  for (int i = 0; i < 4; ++i) {
    data::FrameRecord rec;
    rec.video_id = "v";
    rec.frame_index = i;
    // Grasper on every frame, Hook on two, Bipolar on one, rest never.
    rec.tools = {1, static_cast<std::uint8_t>(i == 0 ? 1 : 0),
                 static_cast<std::uint8_t>(i < 2 ? 1 : 0), 0, 0, 0, 0};
    records.push_back(std::move(rec));
  }
  const data::DatasetManifest manifest = data::assemble_manifest(std::move(records), {});
  const ScarcityStats stats = scarcity_stats(manifest);
  CHECK(stats.positives == std::array<std::int64_t, 7>{4, 1, 2, 0, 0, 0, 0});
  // Empty columns first (ties broken by index), then counts ascending.
  CHECK(stats.ranking == std::array<int, 7>{3, 4, 5, 6, 1, 2, 0});

  const data::DatasetManifest empty;
  CHECK_THROWS_AS(static_cast<void>(scarcity_stats(empty)), EmptyInputError);
}

TEST_CASE("render_frame: shape, range, and per-tool distinctness") {
  SyntheticConfig config;
  config.height = 48;
  config.width = 48;

  std::vector<Tensor> frames;
  for (int t = -1; t < 7; ++t) {
    data::ToolBits labels{};
    if (t >= 0) labels[static_cast<std::size_t>(t)] = 1;
    Rng rng(100);  // identical noise across renders
    frames.push_back(render_frame(config, labels, rng));
  }

  for (const Tensor& frame : frames) {
    REQUIRE(frame.rank() == 3);
    CHECK(frame.dim(0) == 3);
    CHECK(frame.dim(1) == 48);
    CHECK(frame.dim(2) == 48);
    for (long i = 0; i < frame.size(); ++i) {
      CHECK(frame.data()[i] >= 0.0);
      CHECK(frame.data()[i] <= 1.0);
    }
  }

  // Every single-tool frame differs from the empty frame and from every
  // other tool's frame: the glyphs are genuinely distinct signals.
  auto differs = [](const Tensor& a, const Tensor& b) {
    for (long i = 0; i < a.size(); ++i) {
      if (a.data()[i] != b.data()[i]) return true;
    }
    return false;
  };
  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (std::size_t j = i + 1; j < frames.size(); ++j) {
      CHECK(differs(frames[i], frames[j]));
    }
  }
}

TEST_CASE("SyntheticConfig validation") {
  SyntheticConfig config;
  CHECK_NOTHROW(config.validate());

  SyntheticConfig tiny = config;
  tiny.height = 8;
  CHECK_THROWS_AS(tiny.validate(), ConfigError);

  SyntheticConfig bad_prior = config;
  bad_prior.tool_priors[2] = 1.5;
  CHECK_THROWS_AS(bad_prior.validate(), ConfigError);

  SyntheticConfig no_frames = config;
  no_frames.frames_per_video = 0;
  CHECK_THROWS_AS(no_frames.validate(), ConfigError);

  SyntheticConfig no_phase = config;
  no_phase.phase_count = 0;
  CHECK_THROWS_AS(no_phase.validate(), ConfigError);
}
