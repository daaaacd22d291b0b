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

#include <filesystem>

#include <gtest/gtest.h>

#include "funcseg/digest.hpp"
#include "funcseg/error.hpp"
#include "funcseg/pipeline.hpp"
#include "temp_dir.hpp"

namespace funcseg {
namespace {

namespace fs = std::filesystem;

/// Private copy of the bundled desk dataset without any cached artifacts.
class DeskPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    fs::copy(fs::path(FUNCSEG_SOURCE_DIR) / "data" / "desk", dir_.path() / "desk",
             fs::copy_options::recursive);
    fs::remove_all(dir_.path() / "desk" / "cache");
  }

  PipelineConfig config(const std::string& cache = "cache") const {
    PipelineConfig c = PipelineConfig::load((dir_.path() / "desk" / "config.json").string());
    c.cache_dir = (dir_.path() / cache).string();
    return c;
  }

  static std::string dump(const std::vector<TaskResult>& results) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : results) j.push_back(to_json(r));
    return j.dump();
  }

  static std::size_t hits(Pipeline& p, const char* stage) { return p.cache().counters()[stage].hits; }
  static std::size_t misses(Pipeline& p, const char* stage) {
    return p.cache().counters()[stage].misses;
  }

  testing::TempDir dir_;
};

TEST_F(DeskPipeline, SecondRunIsAllCacheHitsWithIdenticalResults) {
  const auto c = config();
  const auto tasks = load_dataset_tasks(c);
  ASSERT_EQ(tasks.size(), 4u);
  Pipeline first(c, make_backend(c));
  const auto a = first.run_tasks(tasks);
  for (const auto& r : a) EXPECT_EQ(r.status, TaskStatus::kOk) << r.error;

  Pipeline second(c, make_backend(c));
  const auto b = second.run_tasks(tasks);
  EXPECT_EQ(dump(a), dump(b));
  for (const auto& [stage, counts] : second.cache().counters()) {
    EXPECT_EQ(counts.misses, 0u) << stage;
  }
  EXPECT_EQ(hits(second, stage::kThreshold), 4u);
}

TEST_F(DeskPipeline, WorkerCountDoesNotChangeResults) {
  auto c1 = config("cache1");
  auto c8 = config("cache8");
  c8.jobs = 8;
  const auto tasks = load_dataset_tasks(c1);
  Pipeline p1(c1, make_backend(c1));
  Pipeline p8(c8, make_backend(c8));
  EXPECT_EQ(dump(p1.run_tasks(tasks)), dump(p8.run_tasks(tasks)));
  // Stage artifacts are byte-identical too.
  for (const char* stage : {stage::kSelect, stage::kSegment, stage::kLift}) {
    for (const auto& e : fs::directory_iterator(dir_.path() / "cache1" / stage)) {
      const auto twin = dir_.path() / "cache8" / stage / e.path().filename();
      ASSERT_TRUE(fs::exists(twin)) << twin;
      EXPECT_EQ(read_file_bytes(e.path().string()), read_file_bytes(twin.string()));
    }
  }
}

TEST_F(DeskPipeline, CacheKeysFollowTheSettingsEachStageReads) {
  const auto c = config();
  const auto tasks = load_dataset_tasks(c);
  Pipeline(c, make_backend(c)).run_tasks(tasks);
  const std::size_t n = tasks.size();

  auto rerun = [&](auto mutate) {
    auto m = c;
    mutate(m);
    auto p = std::make_unique<Pipeline>(m, make_backend(m));
    p->run_tasks(tasks);
    return p;
  };

  auto p = rerun([](auto& m) { m.tau = 0.5; });
  EXPECT_EQ(hits(*p, stage::kLift), n);
  EXPECT_EQ(misses(*p, stage::kThreshold), n);

  p = rerun([](auto& m) { m.lift_radius = 0.03; });
  EXPECT_EQ(hits(*p, stage::kSegment), n);
  EXPECT_EQ(misses(*p, stage::kLift), n);

  p = rerun([](auto& m) { m.selection.max_views = 2; });
  EXPECT_EQ(hits(*p, stage::kParse), n);
  EXPECT_EQ(misses(*p, stage::kSelect), n);
  EXPECT_EQ(hits(*p, stage::kDetect), n);

  p = rerun([](auto& m) {
    m.selection.lambda_m = 1.0;
    m.selection.lambda_d = 0.0;
    m.selection.lambda_alpha = 0.0;
  });
  EXPECT_EQ(misses(*p, stage::kSelect), n);
  EXPECT_EQ(hits(*p, stage::kDetect), n);

  p = rerun([](auto& m) { m.query_mode = QueryMode::kObjectOnly; });
  EXPECT_EQ(hits(*p, stage::kSelect), n);
  EXPECT_EQ(misses(*p, stage::kSegment), n);
}

TEST_F(DeskPipeline, FailedTaskDoesNotStopTheOthers) {
  // Make the LLM reply for one task unparsable.
  const fs::path fixtures = dir_.path() / "desk" / "fixtures";
  int patched = 0;
  for (const auto& e : fs::directory_iterator(fixtures)) {
    const auto bytes = read_file_bytes(e.path().string());
    auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    if (j.at("endpoint") != "/v1/chat") continue;
    if (j.at("request").at("user").get<std::string>().find("open the door") == std::string::npos) {
      continue;
    }
    j["response"]["text"] = "I would rather not say.";
    write_file_atomic(e.path().string(), j.dump());
    ++patched;
  }
  ASSERT_EQ(patched, 1);

  const auto c = config();
  Pipeline p(c, make_backend(c));
  const auto results = p.run_tasks(load_dataset_tasks(c));
  int failed = 0;
  for (const auto& r : results) {
    if (r.description == "open the door") {
      EXPECT_EQ(r.status, TaskStatus::kFailed);
      EXPECT_NE(r.error.find("JSON"), std::string::npos) << r.error;
      EXPECT_EQ(r.overlap.iou, 0.0);
      ++failed;
    } else {
      EXPECT_EQ(r.status, TaskStatus::kOk) << r.error;
    }
  }
  EXPECT_EQ(failed, 1);
  EXPECT_EQ(Pipeline::evaluate(results).tasks, 4u);
}

TEST_F(DeskPipeline, OfflineEvaluationReadsOnlyTheCache) {
  const auto c = config();
  const auto tasks = load_dataset_tasks(c);
  {
    Pipeline offline(c, make_backend(c), /*offline=*/true);
    EXPECT_THROW(offline.run_tasks(tasks), MissingArtifactError);
  }
  Pipeline online(c, make_backend(c));
  const auto a = online.run_tasks(tasks);
  Pipeline offline(c, make_backend(c), /*offline=*/true);
  EXPECT_EQ(dump(offline.run_tasks(tasks)), dump(a));

  // No backend at all: same keys cannot be formed, so nothing is found.
  auto bare = c;
  bare.fixture_dir.clear();
  Pipeline none(bare, nullptr);
  EXPECT_THROW(none.parse(tasks[0].description), MissingArtifactError);
}

TEST_F(DeskPipeline, SweepReusesStagesAndMatchesDirectRuns) {
  const auto c = config();
  const auto tasks = load_dataset_tasks(c);
  SweepGrid grid;
  grid.views = {2, 50};
  grid.taus = {0.5, 0.7};
  Pipeline p(c, make_backend(c));
  const auto rows = run_pipeline_sweep(p, grid, tasks);
  ASSERT_EQ(rows.size(), 4u);

  auto direct = c;
  direct.selection.max_views = 2;
  direct.tau = 0.5;
  Pipeline q(direct, make_backend(direct));
  EXPECT_DOUBLE_EQ(rows[0].metrics.mIoU, Pipeline::evaluate(q.run_tasks(tasks)).mIoU);
}

}  // namespace
}  // namespace funcseg
