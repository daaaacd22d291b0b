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

#include "funcseg/evaluation.hpp"

#include <algorithm>
#include <map>
#include <unordered_set>

#include <fmt/format.h>

#include "funcseg/error.hpp"

namespace funcseg {

OverlapScores task_iou(std::span<const std::uint32_t> predicted,
                       std::span<const std::uint32_t> gt) {
  if (gt.empty()) throw ContractError("task_iou: empty ground truth");
  const std::unordered_set<std::uint32_t> gt_set(gt.begin(), gt.end());
  const std::unordered_set<std::uint32_t> pred_set(predicted.begin(), predicted.end());
  std::size_t inter = 0;
  for (std::uint32_t i : pred_set) inter += gt_set.count(i);
  const std::size_t uni = pred_set.size() + gt_set.size() - inter;
  OverlapScores s;
  s.iou = static_cast<double>(inter) / static_cast<double>(uni);
  s.precision = pred_set.empty() ? 0.0 : static_cast<double>(inter) / pred_set.size();
  s.recall = static_cast<double>(inter) / gt_set.size();
  return s;
}

nlohmann::json to_json(const TaskResult& r) {
  nlohmann::json j = {{"scene_id", r.scene_id},
                      {"description", r.description},
                      {"status", r.status == TaskStatus::kOk ? "ok" : "failed"}};
  if (r.status == TaskStatus::kFailed) j["error"] = r.error;
  j["iou"] = r.overlap.iou;
  j["precision"] = r.overlap.precision;
  j["recall"] = r.overlap.recall;
  j["confidence"] = r.confidence;
  j["predicted_points"] = r.predicted.point_indices.size();
  j["gt_points"] = r.gt.size();
  return j;
}

double detection_rate(std::span<const double> ious, double t) {
  if (ious.empty()) throw ContractError("detection_rate: no tasks");
  const auto hits = std::count_if(ious.begin(), ious.end(), [t](double iou) { return iou > t; });
  return static_cast<double>(hits) / static_cast<double>(ious.size());
}

AggregateMetrics aggregate_ious(std::span<const double> ious) {
  if (ious.empty()) throw ContractError("aggregate: no task results");
  AggregateMetrics m;
  m.tasks = ious.size();
  double mean_rate = 0.0;
  for (int step = 0; step < 10; ++step) {
    mean_rate += detection_rate(ious, (50 + 5 * step) / 100.0);
  }
  mean_rate /= 10.0;
  m.mAP = m.mAR = 100.0 * mean_rate;
  m.AP50 = m.AR50 = 100.0 * detection_rate(ious, 0.50);
  m.AP25 = m.AR25 = 100.0 * detection_rate(ious, 0.25);
  double sum = 0.0;
  for (double v : ious) sum += v;
  m.mIoU = 100.0 * sum / static_cast<double>(ious.size());
  return m;
}

AggregateMetrics aggregate(std::span<const TaskResult> results) {
  std::vector<double> ious;
  ious.reserve(results.size());
  for (const auto& r : results) ious.push_back(r.overlap.iou);
  return aggregate_ious(ious);
}

std::string metrics_protocol_note() {
  return "# single prediction per task scored against the union ground-truth mask;\n"
         "# AP_t and AR_t both equal the fraction of tasks with IoU > t\n";
}

std::string metrics_csv(const AggregateMetrics& m) {
  return metrics_protocol_note() +
         fmt::format("tasks,mAP,AP50,AP25,mAR,AR50,AR25,mIoU\n{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f}\n",
                     m.tasks, m.mAP, m.AP50, m.AP25, m.mAR, m.AR50, m.AR25, m.mIoU);
}

std::string metrics_table(const AggregateMetrics& m) {
  return fmt::format(
      "{:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}\n"
      "{:>6} {:>6.1f} {:>6.1f} {:>6.1f} {:>6.1f} {:>6.1f} {:>6.1f} {:>6.1f}\n",
      "tasks", "mAP", "AP50", "AP25", "mAR", "AR50", "AR25", "mIoU", m.tasks, m.mAP, m.AP50,
      m.AP25, m.mAR, m.AR50, m.AR25, m.mIoU);
}

nlohmann::json to_json(const AggregateMetrics& m) {
  return {{"tasks", m.tasks}, {"mAP", m.mAP},   {"AP50", m.AP50}, {"AP25", m.AP25},
          {"mAR", m.mAR},     {"AR50", m.AR50}, {"AR25", m.AR25}, {"mIoU", m.mIoU}};
}

SweepGrid SweepGrid::from_json(const nlohmann::json& j) {
  try {
    SweepGrid g;
    if (j.contains("lambda")) {
      for (const auto& l : j.at("lambda")) {
        const auto v = l.get<std::vector<double>>();
        if (v.size() != 3) throw ConfigError("sweep: each lambda entry needs 3 weights");
        g.lambdas.push_back({v[0], v[1], v[2]});
      }
    }
    if (j.contains("views")) g.views = j.at("views").get<std::vector<int>>();
    if (j.contains("tau")) g.taus = j.at("tau").get<std::vector<double>>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sweep grid: ") + e.what());
  }
}

std::vector<SweepCell> SweepGrid::cells(const SweepCell& base) const {
  const auto lambdas_axis =
      lambdas.empty() ? std::vector<std::array<double, 3>>{{base.selection.lambda_m,
                                                            base.selection.lambda_d,
                                                            base.selection.lambda_alpha}}
                      : lambdas;
  const auto views_axis = views.empty() ? std::vector<int>{base.selection.max_views} : views;
  const auto taus_axis = taus.empty() ? std::vector<double>{base.tau} : taus;
  std::vector<SweepCell> out;
  for (const auto& l : lambdas_axis) {
    for (int v : views_axis) {
      for (double t : taus_axis) {
        SweepCell cell = base;
        cell.selection.lambda_m = l[0];
        cell.selection.lambda_d = l[1];
        cell.selection.lambda_alpha = l[2];
        cell.selection.max_views = v;
        cell.tau = t;
        cell.selection.validate();
        if (!(t >= 0.0 && t < 1.0)) throw ConfigError(fmt::format("sweep: tau {} outside [0, 1)", t));
        out.push_back(cell);
      }
    }
  }
  return out;
}

std::vector<SweepRow> run_sweep(const SweepGrid& grid, const SweepCell& base,
                                const CellEvaluator& evaluate) {
  const auto cells = grid.cells(base);
  std::vector<SweepRow> rows;
  rows.reserve(cells.size());
  for (const auto& cell : cells) rows.push_back({cell, evaluate(cell)});
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = metrics_protocol_note();
  out += "lambda_m,lambda_d,lambda_alpha,views,tau,tasks,mAP,AP50,AP25,mAR,AR50,AR25,mIoU\n";
  for (const auto& r : rows) {
    const auto& s = r.cell.selection;
    const auto& m = r.metrics;
    out += fmt::format("{},{},{},{},{},{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f}\n",
                       s.lambda_m, s.lambda_d, s.lambda_alpha, s.max_views, r.cell.tau, m.tasks,
                       m.mAP, m.AP50, m.AP25, m.mAR, m.AR50, m.AR25, m.mIoU);
  }
  return out;
}

std::string sweep_table(std::span<const SweepRow> rows) {
  std::string out = fmt::format("{:>5} {:>5} {:>5} {:>5} {:>5} | {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}\n",
                                "l_m", "l_d", "l_a", "V", "tau", "mAP", "AP50", "AP25", "mAR",
                                "AR50", "AR25", "mIoU");
  for (const auto& r : rows) {
    const auto& s = r.cell.selection;
    const auto& m = r.metrics;
    out += fmt::format(
        "{:>5.2f} {:>5.2f} {:>5.2f} {:>5} {:>5.2f} | {:>6.1f} {:>6.1f} {:>6.1f} {:>6.1f} {:>6.1f} {:>6.1f} {:>6.1f}\n",
        s.lambda_m, s.lambda_d, s.lambda_alpha, s.max_views, r.cell.tau, m.mAP, m.AP50, m.AP25,
        m.mAR, m.AR50, m.AR25, m.mIoU);
  }
  return out;
}

nlohmann::json sweep_json(std::span<const SweepRow> rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    const auto& s = r.cell.selection;
    out.push_back({{"lambda", {s.lambda_m, s.lambda_d, s.lambda_alpha}},
                   {"views", s.max_views},
                   {"tau", r.cell.tau},
                   {"metrics", to_json(r.metrics)}});
  }
  return out;
}

nlohmann::json sweep_plot_data(std::span<const SweepRow> rows) {
  std::map<std::pair<std::array<double, 3>, int>, nlohmann::json> series;
  std::vector<std::pair<std::array<double, 3>, int>> order;
  for (const auto& r : rows) {
    const auto& s = r.cell.selection;
    const std::pair<std::array<double, 3>, int> key{{s.lambda_m, s.lambda_d, s.lambda_alpha},
                                                    s.max_views};
    if (!series.contains(key)) {
      order.push_back(key);
      series[key] = nlohmann::json::array();
    }
    series[key].push_back({r.cell.tau, r.metrics.mIoU});
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& key : order) {
    out.push_back({{"lambda", key.first}, {"views", key.second}, {"tau_miou", series[key]}});
  }
  return {{"x", "tau"}, {"y", "mIoU"}, {"series", out}};
}

}  // namespace funcseg
