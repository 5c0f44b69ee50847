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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "endotool/data/annotations.hpp"

namespace endotool::eval {

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;

  bool operator==(const PRPoint&) const = default;
};

/// Points from a descending-score sweep, one per unique score value (tied
/// scores enter a cut together). Recall is non-decreasing along the list.
struct PRCurve {
  std::vector<PRPoint> points;
  long positives = 0;
  long negatives = 0;
};

/// Labels are exact 0/1. Throws UndefinedMetricError when there is no
/// positive, ValueError on NaN scores or non-binary labels.
PRCurve precision_recall_curve(std::span<const double> scores,
                               std::span<const int> labels);

enum class ApMethod {
  /// All-point interpolation: AP = sum (r_k - r_{k-1}) * max precision at
  /// recall >= r_k, with r_0 = 0. The default convention.
  kEnvelope,
  /// Trapezoidal area under the raw points, for sensitivity analysis only.
  kTrapezoid,
};

double average_precision(const PRCurve& curve,
                         ApMethod method = ApMethod::kEnvelope);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, n-1 denominator

  bool operator==(const MeanStd&) const = default;
};

/// Mean and sample std of exactly 7 per-tool AP values (any common scale).
MeanStd mean_ap(std::span<const double> per_tool_ap);

struct ToolEvaluation {
  std::optional<double> ap;  // absent when the tool has no positive frame
  long positives = 0;
  long negatives = 0;
};

struct EvaluationReport {
  std::array<ToolEvaluation, data::kToolCount> per_tool{};
  double mean = 0.0;  // over tools with a defined AP, in [0,1]
  double std = 0.0;
  int defined_tools = 0;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> metadata;
};

struct FramePrediction {
  std::string video_id;
  std::int64_t frame_index = 0;
  std::array<double, data::kToolCount> confidences{};

  bool operator==(const FramePrediction&) const = default;
};

/// Pools frames across videos, computes per-tool AP, and aggregates.
/// Predictions must cover the truth frames exactly; otherwise a
/// CoverageError lists the first 10 offenders. Tools without positives are
/// excluded from the mean with a warning.
EvaluationReport evaluate(std::span<const FramePrediction> predictions,
                          const data::DatasetManifest& truth,
                          ApMethod method = ApMethod::kEnvelope);

struct ToolPresenceDecision {
  std::array<std::uint8_t, data::kToolCount> present{};
  std::array<double, data::kToolCount> thresholds{};
};

/// present[i] = 1 iff confidences[i] > thresholds[i] (strict). Thresholds
/// outside [0,1] are a ConfigError.
ToolPresenceDecision apply_thresholds(
    const std::array<double, data::kToolCount>& confidences,
    const std::array<double, data::kToolCount>& thresholds);

/// Round-half-even rendering at one decimal; input must be non-negative.
std::string format_one_decimal(double value);

/// Tool rows plus a final `MEAN\t<m>±<s>` row, all at one decimal in
/// percent scale. `ap_percent` entries may be absent (rendered "-") and are
/// then excluded from the aggregate.
std::string render_ap_table(
    const std::array<std::optional<double>, data::kToolCount>& ap_percent);

/// Table-style text of a report (APs scaled to percent).
std::string render_report(const EvaluationReport& report);

/// Machine-readable table: tool, AP in [0,1] at 6 decimals ("-" when
/// undefined), positive and negative counts; MEAN and STD rows follow.
std::string report_summary_tsv(const EvaluationReport& report);

}  // namespace endotool::eval
