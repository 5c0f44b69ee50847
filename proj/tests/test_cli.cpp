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

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

namespace fs = std::filesystem;
using testsupport::CliResult;
using testsupport::run_cli;
using testsupport::slurp;
using testsupport::spit;
using testsupport::TempDir;

namespace {

// Generates a small synthetic dataset under <root>/data via the CLI itself
// and returns the data directory. 32x32 keeps the reduced backbone fast.
fs::path make_synth_data(const fs::path& root, int videos = 2, int frames = 12,
                         unsigned seed = 5) {
  const fs::path data = root / "data";
  std::ostringstream cmd;
  cmd << "synth --out " << data.string() << " --height 32 --width 32 --videos "
      << videos << " --frames " << frames << " --phases 4 --seed " << seed;
  const CliResult r = run_cli(cmd.str(), root);
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(data / "manifest.json"));
  return data;
}

int count_lines(const std::string& text) {
  int lines = 0;
  for (char c : text) {
    if (c == '\n') ++lines;
  }
  return lines;
}

}  // namespace

TEST_CASE("cli: version and argument errors") {
  TempDir tmp;
  const CliResult version = run_cli("--version", tmp.path());
  CHECK(version.exit_code == 0);
  CHECK(version.out.find("0.1.0") != std::string::npos);

  CHECK(run_cli("", tmp.path()).exit_code == 2);          // subcommand required
  CHECK(run_cli("train", tmp.path()).exit_code == 2);      // missing --manifest
  CHECK(run_cli("definitely-not-a-command", tmp.path()).exit_code == 2);
  CHECK(run_cli("synth --height notanumber", tmp.path()).exit_code == 2);
}

TEST_CASE("cli: synth then ingest round-trips the annotation files") {
  TempDir tmp;
  const fs::path data = make_synth_data(tmp.path());

  const fs::path manifest2 = tmp.path() / "reingested.json";
  const CliResult ingest = run_cli("ingest --annotations " +
                                       (data / "annotations").string() +
                                       " --manifest-out " + manifest2.string() +
                                       " --stats",
                                   tmp.path());
  CHECK(ingest.exit_code == 0);
  CHECK(fs::exists(manifest2));
  CHECK(ingest.out.find("videos\t2") != std::string::npos);
  CHECK(ingest.out.find("frames\t24") != std::string::npos);
  CHECK(ingest.out.find("phases\t4") != std::string::npos);
  // --stats prints one row per tool in canonical order.
  CHECK(ingest.out.find("Grasper\t") != std::string::npos);
  CHECK(ingest.out.find("SpecimenBag\t") != std::string::npos);
}

TEST_CASE("cli: ingest rejects malformed annotations with a line number") {
  TempDir tmp;
  const fs::path ann = tmp.path() / "annotations";
  fs::create_directories(ann);
  spit(ann / "vid1_tool.txt",
       "Frame\tGrasper\tBipolar\tHook\tScissors\tClipper\tIrrigator\tSpecimenBag\n"
       "0\t1\t0\t0\t0\t0\t0\t0\n"
       "1\t2\t0\t0\t0\t0\t0\t0\n");
  const CliResult r = run_cli("ingest --annotations " + ann.string() +
                                  " --manifest-out " +
                                  (tmp.path() / "m.json").string(),
                              tmp.path());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("cli: train writes a complete run directory") {
  TempDir tmp;
  const fs::path data = make_synth_data(tmp.path());
  const fs::path runs = tmp.path() / "runs";

  const CliResult train = run_cli(
      "train --manifest " + (data / "manifest.json").string() +
          " --preset EndoNet-Cholec80 --backbone reduced --input-height 32"
          " --input-width 32 --iters 8 --batch 6 --decay-every 3 --seed 3"
          " --checkpoint-every 4 --out " +
          runs.string() + " --run-name demo",
      tmp.path());
  INFO(train.err);
  CHECK(train.exit_code == 0);

  const fs::path run_dir = runs / "demo";
  CHECK(fs::exists(run_dir / "final.ckpt"));
  CHECK(fs::exists(run_dir / "checkpoint_4.ckpt"));
  // The periodic save at the last iteration is covered by final.ckpt.
  CHECK_FALSE(fs::exists(run_dir / "checkpoint_8.ckpt"));
  CHECK(fs::exists(run_dir / "run_meta.json"));

  const std::string log = slurp(run_dir / "train_log.tsv");
  CHECK(count_lines(log) == 9);  // header + 8 iterations
  CHECK(log.rfind("iter\tlr_backbone\tlr_heads\tloss_tool\tloss_phase\tloss_total\n",
                  0) == 0);
  // EndoNet logs a numeric phase loss, not the "-" placeholder.
  CHECK(log.find("\t-\t") == std::string::npos);

  const std::string resolved = slurp(run_dir / "resolved_config.txt");
  CHECK(resolved.find("total_iterations=8\n") != std::string::npos);
  CHECK(resolved.find("batch_size=6\n") != std::string::npos);
  CHECK(resolved.find("decay_every=3\n") != std::string::npos);
  CHECK(resolved.find("preset=EndoNet-Cholec80\n") != std::string::npos);

  CHECK(train.out.find("iterations\t8") != std::string::npos);
}

TEST_CASE("cli: EndoNet training demands phase labels") {
  TempDir tmp;
  const fs::path data = make_synth_data(tmp.path());

  // Rebuild a manifest from the tool files only: no phase labels anywhere.
  const fs::path tool_only = tmp.path() / "tool_only";
  fs::create_directories(tool_only);
  for (const auto& entry : fs::directory_iterator(data / "annotations")) {
    const std::string name = entry.path().filename().string();
    if (name.find("_tool.txt") != std::string::npos) {
      fs::copy_file(entry.path(), tool_only / name);
    }
  }
  const fs::path manifest = tmp.path() / "tool_only.json";
  REQUIRE(run_cli("ingest --annotations " + tool_only.string() +
                      " --manifest-out " + manifest.string(),
                  tmp.path())
              .exit_code == 0);

  const CliResult r = run_cli(
      "train --manifest " + manifest.string() +
          " --data-root " + data.string() +
          " --preset EndoNet-Cholec80 --backbone reduced --input-height 32"
          " --input-width 32 --iters 2 --batch 4 --out " +
          (tmp.path() / "runs").string(),
      tmp.path());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("phase") != std::string::npos);
}

TEST_CASE("cli: training is reproducible under a fixed seed") {
  TempDir tmp;
  const fs::path data = make_synth_data(tmp.path());
  const std::string base =
      "train --manifest " + (data / "manifest.json").string() +
      " --preset ToolNet-Cholec80 --backbone reduced --input-height 32"
      " --input-width 32 --iters 5 --batch 6 --out " +
      (tmp.path() / "runs").string();

  REQUIRE(run_cli(base + " --seed 7 --run-name a", tmp.path()).exit_code == 0);
  REQUIRE(run_cli(base + " --seed 7 --run-name b", tmp.path()).exit_code == 0);
  REQUIRE(run_cli(base + " --seed 8 --run-name c", tmp.path()).exit_code == 0);

  const std::string log_a = slurp(tmp.path() / "runs" / "a" / "train_log.tsv");
  const std::string log_b = slurp(tmp.path() / "runs" / "b" / "train_log.tsv");
  const std::string log_c = slurp(tmp.path() / "runs" / "c" / "train_log.tsv");
  CHECK(log_a == log_b);
  CHECK(log_a != log_c);

  CHECK(slurp(tmp.path() / "runs" / "a" / "final.ckpt") ==
        slurp(tmp.path() / "runs" / "b" / "final.ckpt"));
}

TEST_CASE("cli: config file sits between preset and flags") {
  TempDir tmp;
  const fs::path data = make_synth_data(tmp.path());
  const fs::path cfg = tmp.path() / "train.cfg";
  spit(cfg,
       "# comment lines are skipped\n"
       "preset=ToolNet-Cholec80\n"
       "total_iterations=6\n"
       "batch_size=5\n"
       "base_lr=0.002\n");

  const CliResult r = run_cli(
      "train --manifest " + (data / "manifest.json").string() + " --config " +
          cfg.string() +
          " --backbone reduced --input-height 32 --input-width 32"
          " --iters 3 --out " +
          (tmp.path() / "runs").string() + " --run-name cfg",
      tmp.path());
  INFO(r.err);
  CHECK(r.exit_code == 0);

  const std::string resolved =
      slurp(tmp.path() / "runs" / "cfg" / "resolved_config.txt");
  // Flag overrides the file; file overrides the preset default (50/1e-3).
  CHECK(resolved.find("total_iterations=3\n") != std::string::npos);
  CHECK(resolved.find("batch_size=5\n") != std::string::npos);
  CHECK(resolved.find("base_lr=0.002") != std::string::npos);
  CHECK(resolved.find("head_lr=0.01") != std::string::npos);
  CHECK(resolved.find("preset=ToolNet-Cholec80\n") != std::string::npos);

  // Unknown keys are a configuration error.
  spit(cfg, "not_a_key=1\n");
  const CliResult bad = run_cli(
      "train --manifest " + (data / "manifest.json").string() + " --config " +
          cfg.string() + " --iters 1 --out " + (tmp.path() / "runs2").string(),
      tmp.path());
  CHECK(bad.exit_code == 2);
  CHECK(bad.err.find("not_a_key") != std::string::npos);

  // A variant flag that contradicts the preset is rejected.
  const CliResult conflict = run_cli(
      "train --manifest " + (data / "manifest.json").string() +
          " --preset EndoNet-Cholec80 --variant ToolNet --backbone reduced"
          " --input-height 32 --input-width 32 --iters 1 --out " +
          (tmp.path() / "runs3").string(),
      tmp.path());
  CHECK(conflict.exit_code == 2);

  // ToolNet cannot take a phase count.
  const CliResult phase_clash = run_cli(
      "train --manifest " + (data / "manifest.json").string() +
          " --preset ToolNet-Cholec80 --phases 5 --backbone reduced"
          " --input-height 32 --input-width 32 --iters 1 --out " +
          (tmp.path() / "runs4").string(),
      tmp.path());
  CHECK(phase_clash.exit_code == 2);
}

TEST_CASE("cli: predict emits well-formed per-video files and decisions") {
  TempDir tmp;
  const fs::path data = make_synth_data(tmp.path(), /*videos=*/1, /*frames=*/10);
  const fs::path runs = tmp.path() / "runs";
  REQUIRE(run_cli("train --manifest " + (data / "manifest.json").string() +
                      " --preset ToolNet-Cholec80 --backbone reduced"
                      " --input-height 32 --input-width 32 --iters 2 --batch 5"
                      " --out " + runs.string() + " --run-name p",
                  tmp.path())
              .exit_code == 0);

  const fs::path preds = tmp.path() / "preds";
  const CliResult predict = run_cli(
      "predict --checkpoint " + (runs / "p" / "final.ckpt").string() +
          " --manifest " + (data / "manifest.json").string() +
          " --variant ToolNet --thresholds 0.5 --out " + preds.string(),
      tmp.path());
  INFO(predict.err);
  CHECK(predict.exit_code == 0);

  const std::string pred_text = slurp(preds / "video001_pred.txt");
  CHECK(count_lines(pred_text) == 11);  // header + 10 frames
  std::istringstream lines(pred_text);
  std::string line;
  std::getline(lines, line);
  CHECK(line ==
        "Frame\tGrasper\tBipolar\tHook\tScissors\tClipper\tIrrigator\tSpecimenBag");
  int rows = 0;
  while (std::getline(lines, line)) {
    CHECK(std::count(line.begin(), line.end(), '\t') == 7);  // 8 columns
    ++rows;
  }
  CHECK(rows == 10);

  // Thresholded decisions are binary and re-parse as annotations.
  const std::string decisions = slurp(preds / "video001_decisions.txt");
  CHECK(count_lines(decisions) == 11);
  CHECK(decisions.find('.') == std::string::npos);  // strictly 0/1 cells

  // The checkpoint knows it is a ToolNet; claiming otherwise is an error.
  const CliResult wrong = run_cli(
      "predict --checkpoint " + (runs / "p" / "final.ckpt").string() +
          " --manifest " + (data / "manifest.json").string() +
          " --variant EndoNet --out " + (tmp.path() / "x").string(),
      tmp.path());
  CHECK(wrong.exit_code == 2);
  CHECK(wrong.err.find("ToolNet") != std::string::npos);
  CHECK(wrong.err.find("EndoNet") != std::string::npos);
}

TEST_CASE("cli: evaluate scores oracle predictions at 100") {
  TempDir tmp;
  const fs::path data = make_synth_data(tmp.path(), /*videos=*/2, /*frames=*/30,
                                        /*seed=*/11);

  // Build oracle predictions straight from the annotation files.
  const fs::path preds = tmp.path() / "preds";
  fs::create_directories(preds);
  for (const std::string video : {"video001", "video002"}) {
    const std::string truth =
        slurp(data / "annotations" / (video + "_tool.txt"));
    std::istringstream lines(truth);
    std::string line;
    std::getline(lines, line);  // header
    std::string out = line + "\n";
    while (std::getline(lines, line)) {
      std::string converted;
      std::size_t col = 0;
      for (char c : line) {
        if (c == '\t') {
          ++col;
          converted += c;
        } else if (col == 0) {
          converted += c;  // frame index verbatim
        } else {
          converted += (c == '1') ? "1.000000" : "0.000000";
        }
      }
      out += converted + "\n";
    }
    spit(preds / (video + "_pred.txt"), out);
  }

  const fs::path report_dir = tmp.path() / "report";
  const CliResult eval = run_cli(
      "evaluate --pred " + preds.string() + " --manifest " +
          (data / "manifest.json").string() + " --out " + report_dir.string(),
      tmp.path());
  INFO(eval.err);
  CHECK(eval.exit_code == 0);
  CHECK(eval.out.find("MEAN\t100.0±0.0") != std::string::npos);
  CHECK(slurp(report_dir / "report.txt") == eval.out);
  CHECK(slurp(report_dir / "summary.tsv").rfind("tool\tap\t", 0) == 0);

  // Tampering with coverage must hard-fail with exit code 3.
  std::string tampered = slurp(preds / "video001_pred.txt");
  const std::size_t second_line = tampered.find('\n', tampered.find('\n') + 1);
  tampered.erase(tampered.find('\n') + 1, second_line - tampered.find('\n'));
  spit(preds / "video001_pred.txt", tampered);
  const CliResult broken = run_cli(
      "evaluate --pred " + preds.string() + " --manifest " +
          (data / "manifest.json").string() + " --out " +
          (tmp.path() / "report2").string(),
      tmp.path());
  CHECK(broken.exit_code == 3);
  CHECK(broken.err.find("video001") != std::string::npos);
}

TEST_CASE("cli: evaluate renders a published AP column from a file") {
  TempDir tmp;
  const fs::path ap_file = tmp.path() / "column.txt";
  spit(ap_file,
       "Grasper\t87.0\n"
       "Bipolar\t68.7\n"
       "Hook\t93.9\n"
       "Scissors\t52.8\n"
       "Clipper\t66.5\n"
       "Irrigator\t63.0\n"
       "SpecimenBag\t87.3\n");
  const CliResult r = run_cli("evaluate --from-ap-file " + ap_file.string() +
                                  " --out " + (tmp.path() / "out").string(),
                              tmp.path());
  INFO(r.err);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("MEAN\t74.2±15.3") != std::string::npos);
  CHECK(slurp(tmp.path() / "out" / "report.txt") == r.out);

  spit(ap_file, "87.0\n68.7\n93.9\n52.8\n66.5\n");  // five rows: wrong arity
  CHECK(run_cli("evaluate --from-ap-file " + ap_file.string() + " --out " +
                    (tmp.path() / "out2").string(),
                tmp.path())
            .exit_code == 2);
}

TEST_CASE("cli: full pipeline is byte-deterministic end to end") {
  TempDir tmp;
  std::array<std::string, 2> reports;
  for (int round = 0; round < 2; ++round) {
    const fs::path root = tmp.path() / ("round" + std::to_string(round));
    fs::create_directories(root);
    const fs::path data = make_synth_data(root, /*videos=*/1, /*frames=*/8,
                                          /*seed=*/21);
    REQUIRE(run_cli("train --manifest " + (data / "manifest.json").string() +
                        " --preset ToolNet-Cholec80 --backbone reduced"
                        " --input-height 32 --input-width 32 --iters 3"
                        " --batch 4 --seed 13 --out " +
                        (root / "runs").string() + " --run-name r",
                    tmp.path())
                .exit_code == 0);
    REQUIRE(run_cli("predict --checkpoint " +
                        (root / "runs" / "r" / "final.ckpt").string() +
                        " --manifest " + (data / "manifest.json").string() +
                        " --out " + (root / "preds").string(),
                    tmp.path())
                .exit_code == 0);
    const CliResult eval = run_cli(
        "evaluate --pred " + (root / "preds").string() + " --manifest " +
            (data / "manifest.json").string() + " --out " +
            (root / "report").string(),
        tmp.path());
    REQUIRE(eval.exit_code == 0);
    reports[static_cast<std::size_t>(round)] = slurp(root / "report" / "report.txt");
  }
  CHECK(reports[0] == reports[1]);
}
