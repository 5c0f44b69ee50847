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

#include "endotool/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "endotool/errors.hpp"

namespace endotool::eval {

PRCurve precision_recall_curve(std::span<const double> scores,
                               std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("precision_recall_curve: " + std::to_string(scores.size()) +
                     " scores vs " + std::to_string(labels.size()) + " labels");
  }
  if (scores.empty()) {
    throw EmptyInputError("precision_recall_curve: no samples");
  }
  long positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) {
      throw ValueError("precision_recall_curve: NaN score at index " +
                       std::to_string(i));
    }
    if (labels[i] != 0 && labels[i] != 1) {
      throw ValueError("precision_recall_curve: label at index " +
                       std::to_string(i) + " is " + std::to_string(labels[i]) +
                       ", expected 0 or 1");
    }
    positives += labels[i];
  }
  if (positives == 0) {
    throw UndefinedMetricError(
        "precision_recall_curve: no positive labels; the curve is undefined");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  PRCurve curve;
  curve.positives = positives;
  curve.negatives = static_cast<long>(scores.size()) - positives;
  long tp = 0;
  long fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    // All samples sharing this score enter the cut together.
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp += labels[order[j]];
      fp += 1 - labels[order[j]];
      ++j;
    }
    curve.points.push_back(
        PRPoint{static_cast<double>(tp) / static_cast<double>(positives),
                static_cast<double>(tp) / static_cast<double>(tp + fp)});
    i = j;
  }
  return curve;
}

double average_precision(const PRCurve& curve, ApMethod method) {
  if (curve.points.empty()) {
    throw EmptyInputError("average_precision: empty curve");
  }
  if (curve.positives < 1) {
    throw UndefinedMetricError("average_precision: curve has no positives");
  }
  const std::vector<PRPoint>& pts = curve.points;
  double ap = 0.0;
  if (method == ApMethod::kEnvelope) {
    // Interpolated precision: running max of precision at recall >= r.
    std::vector<double> envelope(pts.size());
    double running = 0.0;
    for (std::size_t k = pts.size(); k-- > 0;) {
      running = std::max(running, pts[k].precision);
      envelope[k] = running;
    }
    double prev_recall = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      ap += (pts[k].recall - prev_recall) * envelope[k];
      prev_recall = pts[k].recall;
    }
  } else {
    double prev_recall = 0.0;
    double prev_precision = pts.front().precision;
    for (const PRPoint& p : pts) {
      ap += (p.recall - prev_recall) * 0.5 * (p.precision + prev_precision);
      prev_recall = p.recall;
      prev_precision = p.precision;
    }
  }
  return ap;
}

MeanStd mean_ap(std::span<const double> per_tool_ap) {
  if (per_tool_ap.size() != static_cast<std::size_t>(data::kToolCount)) {
    throw ArityError("mean_ap needs exactly 7 values, got " +
                     std::to_string(per_tool_ap.size()));
  }
  double mean = 0.0;
  for (double v : per_tool_ap) mean += v;
  mean /= static_cast<double>(data::kToolCount);
  double ss = 0.0;
  for (double v : per_tool_ap) ss += (v - mean) * (v - mean);
  return MeanStd{mean, std::sqrt(ss / static_cast<double>(data::kToolCount - 1))};
}

EvaluationReport evaluate(std::span<const FramePrediction> predictions,
                          const data::DatasetManifest& truth, ApMethod method) {
  using Key = std::pair<std::string, std::int64_t>;
  std::map<Key, const data::FrameRecord*> truth_by_key;
  for (const data::FrameRecord& r : truth.records) {
    truth_by_key[{r.video_id, r.frame_index}] = &r;
  }

  std::vector<std::string> offenders;
  std::map<Key, int> seen;
  std::vector<const data::FrameRecord*> matched;
  matched.reserve(predictions.size());
  for (const FramePrediction& p : predictions) {
    const Key key{p.video_id, p.frame_index};
    const auto it = truth_by_key.find(key);
    if (it == truth_by_key.end()) {
      offenders.push_back("extra prediction: video \"" + p.video_id +
                          "\" frame " + std::to_string(p.frame_index));
      continue;
    }
    if (++seen[key] > 1) {
      offenders.push_back("duplicate prediction: video \"" + p.video_id +
                          "\" frame " + std::to_string(p.frame_index));
      continue;
    }
    matched.push_back(it->second);
  }
  for (const auto& [key, record] : truth_by_key) {
    (void)record;
    if (seen.find(key) == seen.end()) {
      offenders.push_back("missing prediction: video \"" + key.first +
                          "\" frame " + std::to_string(key.second));
    }
  }
  if (!offenders.empty()) {
    std::string msg = "predictions do not cover the truth frames exactly (" +
                      std::to_string(offenders.size()) + " offenders):";
    const std::size_t shown = std::min<std::size_t>(offenders.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) msg += "\n  " + offenders[i];
    if (offenders.size() > shown) {
      msg += "\n  ... and " + std::to_string(offenders.size() - shown) + " more";
    }
    throw CoverageError(msg);
  }

  EvaluationReport report;
  std::vector<double> defined_aps;
  for (int t = 0; t < data::kToolCount; ++t) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(predictions.size());
    labels.reserve(predictions.size());
    std::size_t m = 0;
    for (const FramePrediction& p : predictions) {
      scores.push_back(p.confidences[static_cast<std::size_t>(t)]);
      labels.push_back(matched[m]->tools[static_cast<std::size_t>(t)]);
      ++m;
    }
    ToolEvaluation& tool = report.per_tool[static_cast<std::size_t>(t)];
    tool.positives = std::accumulate(labels.begin(), labels.end(), 0L);
    tool.negatives = static_cast<long>(labels.size()) - tool.positives;
    if (tool.positives == 0) {
      report.warnings.push_back("tool " + std::string(data::tool_name(t)) +
                                " has no positive frame; AP undefined, "
                                "excluded from the mean");
      continue;
    }
    tool.ap = average_precision(precision_recall_curve(scores, labels), method);
    defined_aps.push_back(*tool.ap);
  }
  if (defined_aps.empty()) {
    throw UndefinedMetricError(
        "evaluate: every tool has zero positive frames; mAP is undefined");
  }
  report.defined_tools = static_cast<int>(defined_aps.size());
  if (defined_aps.size() == static_cast<std::size_t>(data::kToolCount)) {
    const MeanStd ms = mean_ap(defined_aps);
    report.mean = ms.mean;
    report.std = ms.std;
  } else {
    double mean = 0.0;
    for (double v : defined_aps) mean += v;
    mean /= static_cast<double>(defined_aps.size());
    double ss = 0.0;
    for (double v : defined_aps) ss += (v - mean) * (v - mean);
    report.mean = mean;
    report.std = defined_aps.size() > 1
                     ? std::sqrt(ss / static_cast<double>(defined_aps.size() - 1))
                     : 0.0;
  }
  return report;
}

ToolPresenceDecision apply_thresholds(
    const std::array<double, data::kToolCount>& confidences,
    const std::array<double, data::kToolCount>& thresholds) {
  for (int t = 0; t < data::kToolCount; ++t) {
    const double thr = thresholds[static_cast<std::size_t>(t)];
    if (!(thr >= 0.0) || !(thr <= 1.0)) {
      throw ConfigError("threshold for " + std::string(data::tool_name(t)) +
                        " must lie in [0, 1], got " + std::to_string(thr));
    }
  }
  ToolPresenceDecision decision;
  decision.thresholds = thresholds;
  for (int t = 0; t < data::kToolCount; ++t) {
    decision.present[static_cast<std::size_t>(t)] =
        confidences[static_cast<std::size_t>(t)] >
                thresholds[static_cast<std::size_t>(t)]
            ? 1
            : 0;
  }
  return decision;
}

std::string format_one_decimal(double value) {
  if (!std::isfinite(value) || value < 0.0) {
    throw ValueError("format_one_decimal expects a non-negative finite value");
  }
  // std::nearbyint under the default FE_TONEAREST mode rounds half to even.
  const long long tenths = static_cast<long long>(std::nearbyint(value * 10.0));
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

std::string render_ap_table(
    const std::array<std::optional<double>, data::kToolCount>& ap_percent) {
  std::string out;
  std::vector<double> defined;
  for (int t = 0; t < data::kToolCount; ++t) {
    const auto& v = ap_percent[static_cast<std::size_t>(t)];
    out += std::string(data::tool_name(t));
    out += '\t';
    out += v.has_value() ? format_one_decimal(*v) : "-";
    out += '\n';
    if (v.has_value()) defined.push_back(*v);
  }
  out += "MEAN\t";
  if (defined.empty()) {
    out += "-";
  } else if (defined.size() == static_cast<std::size_t>(data::kToolCount)) {
    const MeanStd ms = mean_ap(defined);
    out += format_one_decimal(ms.mean) + "±" + format_one_decimal(ms.std);
  } else {
    double mean = 0.0;
    for (double v : defined) mean += v;
    mean /= static_cast<double>(defined.size());
    double ss = 0.0;
    for (double v : defined) ss += (v - mean) * (v - mean);
    const double sd = defined.size() > 1
                          ? std::sqrt(ss / static_cast<double>(defined.size() - 1))
                          : 0.0;
    out += format_one_decimal(mean) + "±" + format_one_decimal(sd);
  }
  out += '\n';
  return out;
}

std::string render_report(const EvaluationReport& report) {
  std::array<std::optional<double>, data::kToolCount> percents;
  for (int t = 0; t < data::kToolCount; ++t) {
    const auto& tool = report.per_tool[static_cast<std::size_t>(t)];
    if (tool.ap.has_value()) {
      percents[static_cast<std::size_t>(t)] = *tool.ap * 100.0;
    }
  }
  return render_ap_table(percents);
}

std::string report_summary_tsv(const EvaluationReport& report) {
  char buf[64];
  std::string out = "tool\tap\tpositives\tnegatives\n";
  for (int t = 0; t < data::kToolCount; ++t) {
    const auto& tool = report.per_tool[static_cast<std::size_t>(t)];
    out += std::string(data::tool_name(t));
    out += '\t';
    if (tool.ap.has_value()) {
      std::snprintf(buf, sizeof(buf), "%.6f", *tool.ap);
      out += buf;
    } else {
      out += "-";
    }
    out += '\t' + std::to_string(tool.positives) + '\t' +
           std::to_string(tool.negatives) + '\n';
  }
  std::snprintf(buf, sizeof(buf), "%.6f", report.mean);
  out += "MEAN\t" + std::string(buf) + "\t-\t-\n";
  std::snprintf(buf, sizeof(buf), "%.6f", report.std);
  out += "STD\t" + std::string(buf) + "\t-\t-\n";
  return out;
}

}  // namespace endotool::eval
