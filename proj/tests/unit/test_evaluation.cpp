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

#include <random>

#include <gtest/gtest.h>

#include "funcseg/error.hpp"
#include "funcseg/evaluation.hpp"

namespace funcseg {
namespace {

TEST(TaskIou, SetOverlap) {
  const std::vector<std::uint32_t> gt{1, 2, 3, 4};
  const std::vector<std::uint32_t> pred{3, 4, 5};
  const auto s = task_iou(pred, gt);
  EXPECT_DOUBLE_EQ(s.iou, 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(s.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  const auto empty = task_iou(std::vector<std::uint32_t>{}, gt);
  EXPECT_EQ(empty.iou, 0.0);
  EXPECT_EQ(empty.precision, 0.0);
  EXPECT_DOUBLE_EQ(task_iou(gt, gt).iou, 1.0);
  EXPECT_THROW(task_iou(pred, std::vector<std::uint32_t>{}), ContractError);
}

TEST(TaskIou, MatchesSetOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::set<std::uint32_t> a, b;
    for (int i = 0; i < 40; ++i) {
      if (rng() % 3 == 0) a.insert(i);
      if (rng() % 3 == 0) b.insert(i);
    }
    b.insert(41);
    std::size_t inter = 0;
    for (auto x : a) inter += b.count(x);
    const std::size_t uni = a.size() + b.size() - inter;
    const std::vector<std::uint32_t> va(a.begin(), a.end()), vb(b.begin(), b.end());
    ASSERT_DOUBLE_EQ(task_iou(va, vb).iou, double(inter) / double(uni));
  }
}

TEST(Aggregate, FourTaskHandCase) {
  const std::vector<double> ious{1.0, 0.6, 0.3, 0.0};
  const auto m = aggregate_ious(ious);
  EXPECT_EQ(m.AP25, 75.0);
  EXPECT_EQ(m.AP50, 50.0);
  EXPECT_EQ(m.mAP, 30.0);
  EXPECT_EQ(m.mIoU, 47.5);
  EXPECT_EQ(m.AR25, m.AP25);
  EXPECT_EQ(m.AR50, m.AP50);
  EXPECT_EQ(m.mAR, m.mAP);
  EXPECT_EQ(m.tasks, 4u);
}

TEST(Aggregate, Boundaries) {
  const std::vector<double> perfect(5, 1.0), zero(5, 0.0);
  const auto p = aggregate_ious(perfect);
  const auto z = aggregate_ious(zero);
  for (double v : {p.mAP, p.AP50, p.AP25, p.mAR, p.AR50, p.AR25, p.mIoU}) EXPECT_EQ(v, 100.0);
  for (double v : {z.mAP, z.AP50, z.AP25, z.mAR, z.AR50, z.AR25, z.mIoU}) EXPECT_EQ(v, 0.0);
  // IoU exactly on a threshold does not count.
  EXPECT_EQ(detection_rate(std::vector<double>{0.5}, 0.5), 0.0);
  EXPECT_EQ(detection_rate(std::vector<double>{0.25}, 0.25), 0.0);
  EXPECT_THROW(aggregate_ious(std::vector<double>{}), ContractError);
}

TEST(Aggregate, MatchesEnumerationAndIsMonotone) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> ious(1 + rng() % 30);
    for (auto& v : ious) v = u(rng);
    const auto m = aggregate_ious(ious);
    double hits = 0;
    for (int t = 50; t <= 95; t += 5) {
      for (double v : ious) hits += v > t / 100.0;
    }
    ASSERT_NEAR(m.mAP, 100.0 * hits / (10.0 * ious.size()), 1e-9);
    ASSERT_GE(m.AP25, m.AP50);
    ASSERT_GE(m.AP50, m.mAP - 1e-9);
    // Raising any single IoU never lowers a metric.
    auto better = ious;
    better[rng() % better.size()] = 1.0;
    const auto mb = aggregate_ious(better);
    ASSERT_GE(mb.mAP, m.mAP - 1e-9);
    ASSERT_GE(mb.AP25, m.AP25);
    ASSERT_GE(mb.mIoU, m.mIoU - 1e-9);
  }
}

TEST(Aggregate, FromResultsCountsFailuresAsZero) {
  std::vector<TaskResult> rs(2);
  rs[0].overlap.iou = 0.8;
  rs[1].status = TaskStatus::kFailed;
  rs[1].error = "backend down";
  const auto m = aggregate(rs);
  EXPECT_DOUBLE_EQ(m.mIoU, 40.0);
  EXPECT_EQ(to_json(rs[1]).at("status"), "failed");
}

TEST(Output, CsvCarriesProtocolNote) {
  const auto csv = metrics_csv(aggregate_ious(std::vector<double>{1.0, 0.6, 0.3, 0.0}));
  EXPECT_EQ(csv.rfind(metrics_protocol_note(), 0), 0u);
  EXPECT_NE(csv.find("4,30.0000,50.0000,75.0000,30.0000,50.0000,75.0000,47.5000"),
            std::string::npos);
  EXPECT_NE(metrics_table(aggregate_ious(std::vector<double>{1.0})).find("100.0"),
            std::string::npos);
}

TEST(Sweep, GridOrderDefaultsAndValidation) {
  const auto g = SweepGrid::from_json(nlohmann::json::parse(
      R"({"lambda": [[1,0,0],[0.5,0.25,0.25]], "views": [2, 50], "tau": [0.3, 0.7]})"));
  SweepCell base;
  const auto cells = g.cells(base);
  ASSERT_EQ(cells.size(), 8u);
  EXPECT_EQ(cells[0].selection.lambda_m, 1.0);
  EXPECT_EQ(cells[1].tau, 0.7);
  EXPECT_EQ(cells[2].selection.max_views, 50);
  EXPECT_EQ(cells[4].selection.lambda_m, 0.5);

  const auto only_tau = SweepGrid::from_json(nlohmann::json::parse(R"({"tau": [0.1]})"));
  const auto c1 = only_tau.cells(base);
  ASSERT_EQ(c1.size(), 1u);
  EXPECT_EQ(c1[0].selection.max_views, 50);
  EXPECT_EQ(c1[0].selection.lambda_m, 0.5);

  for (const char* bad : {R"({"lambda": [[1,0]]})", R"({"lambda": [[0.5,0.5,0.5]]})",
                          R"({"views": [0]})", R"({"tau": [1.0]})", R"({"tau": "x"})"}) {
    EXPECT_THROW(SweepGrid::from_json(nlohmann::json::parse(bad)).cells(base), ConfigError) << bad;
  }
}

TEST(Sweep, RunEvaluatesEveryCellAndRejectsBadGridsUpFront) {
  SweepGrid g;
  g.taus = {0.2, 0.4};
  int calls = 0;
  const auto rows = run_sweep(g, {}, [&](const SweepCell& c) {
    ++calls;
    return aggregate_ious(std::vector<double>{c.tau + 0.1});
  });
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(sweep_json(rows).size(), 2u);
  EXPECT_NE(sweep_csv(rows).find("0.5,0.25,0.25,50,0.4,1,"), std::string::npos);
  EXPECT_EQ(sweep_plot_data(rows).at("series").size(), 1u);
  EXPECT_EQ(sweep_plot_data(rows)["series"][0]["tau_miou"].size(), 2u);

  g.taus = {0.2, 2.0};
  calls = 0;
  EXPECT_THROW(run_sweep(g, {}, [&](const SweepCell&) {
                 ++calls;
                 return AggregateMetrics{};
               }),
               ConfigError);
  EXPECT_EQ(calls, 0);
}

}  // namespace
}  // namespace funcseg
