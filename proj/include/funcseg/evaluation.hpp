// Copyright 2026 The funcseg Authors.
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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "funcseg/lifting.hpp"
#include "funcseg/view_selection.hpp"

namespace funcseg {

struct OverlapScores {
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Set overlap between predicted and ground-truth point indices. Precision
/// is 0 for an empty prediction. Throws ContractError on an empty gt.
OverlapScores task_iou(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> gt);

enum class TaskStatus { kOk, kFailed };

struct TaskResult {
  std::string scene_id;
  std::string description;
  TaskStatus status = TaskStatus::kOk;
  std::string error;  // set when status is kFailed
  Mask3D predicted;
  std::vector<std::uint32_t> gt;
  OverlapScores overlap;
  /// Mean normalized heat over predicted points (0 when empty). Recorded
  /// only; aggregation ignores it.
  double confidence = 0.0;
};

nlohmann::json to_json(const TaskResult& result);

/// All values are percentages in [0, 100].
struct AggregateMetrics {
  double mAP = 0.0;
  double AP50 = 0.0;
  double AP25 = 0.0;
  double mAR = 0.0;
  double AR50 = 0.0;
  double AR25 = 0.0;
  double mIoU = 0.0;
  std::size_t tasks = 0;
};

/// Fraction of tasks whose IoU strictly exceeds `t`.
double detection_rate(std::span<const double> ious, double t);

/// One prediction per task against a union ground-truth mask, so AP and AR
/// at a threshold both equal the detection rate. mAP/mAR average the rate
/// over IoU thresholds 0.50, 0.55, ..., 0.95.
AggregateMetrics aggregate(std::span<const TaskResult> results);
AggregateMetrics aggregate_ious(std::span<const double> ious);

/// Header documenting the matching protocol behind the AP/AR columns.
std::string metrics_protocol_note();
std::string metrics_csv(const AggregateMetrics& m);
std::string metrics_table(const AggregateMetrics& m);
nlohmann::json to_json(const AggregateMetrics& m);

/// One hyperparameter combination.
struct SweepCell {
  SelectionConfig selection;
  double tau = 0.7;
};

/// Cartesian grid over weights, view budgets and thresholds. Axes absent
/// from the grid file take the base configuration's value.
struct SweepGrid {
  std::vector<std::array<double, 3>> lambdas;
  std::vector<int> views;
  std::vector<double> taus;

  static SweepGrid from_json(const nlohmann::json& j);
  /// Cells in lambda-major, then view budget, then tau order. Validates
  /// every cell before returning.
  std::vector<SweepCell> cells(const SweepCell& base) const;
};

struct SweepRow {
  SweepCell cell;
  AggregateMetrics metrics;
};

using CellEvaluator = std::function<AggregateMetrics(const SweepCell&)>;

/// Evaluates every cell in order. Invalid cells are rejected before any
/// evaluation starts.
std::vector<SweepRow> run_sweep(const SweepGrid& grid, const SweepCell& base,
                                const CellEvaluator& evaluate);

std::string sweep_csv(std::span<const SweepRow> rows);
std::string sweep_table(std::span<const SweepRow> rows);
nlohmann::json sweep_json(std::span<const SweepRow> rows);
/// (tau, mIoU) series, one per (weights, view budget) pair.
nlohmann::json sweep_plot_data(std::span<const SweepRow> rows);

}  // namespace funcseg
