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

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "funcseg/artifact_cache.hpp"
#include "funcseg/config.hpp"
#include "funcseg/evaluation.hpp"
#include "funcseg/functional_seg.hpp"
#include "funcseg/lifting.hpp"
#include "funcseg/model_backends.hpp"
#include "funcseg/scene_io.hpp"
#include "funcseg/task_parsing.hpp"
#include "funcseg/view_selection.hpp"

namespace funcseg {

/// Stage names, also the cache subdirectories.
namespace stage {
inline constexpr const char* kParse = "parse";
inline constexpr const char* kDetect = "detect";
inline constexpr const char* kSelect = "select";
inline constexpr const char* kSegment = "segment";
inline constexpr const char* kLift = "lift";
inline constexpr const char* kThreshold = "threshold";
}  // namespace stage

/// A loaded scene plus the digest of every file it was read from.
struct LoadedScene {
  Scene scene;
  std::string digest;
  const View& view(const std::string& view_id) const;

  /// Pixel-to-point map of a view, built on first use. Callers must pass the
  /// same radius every time.
  const PixelToPointMap& pixel_map(const std::string& view_id, double radius) const;

 private:
  mutable std::once_flag grid_once_;
  mutable std::unique_ptr<SpatialHashGrid> grid_;
  mutable std::mutex maps_mutex_;
  mutable std::map<std::string, std::shared_ptr<const PixelToPointMap>> maps_;
};

struct SelectionOutput {
  std::string key;
  std::vector<ScoredView> scored;    // every view, manifest order
  std::vector<std::string> selected; // best first
};

struct SegmentationOutput {
  std::string key;
  std::vector<FunctionalMask2D> masks;  // selection order, absent views dropped
  std::vector<std::string> skipped;     // views whose backend calls failed
};

struct LiftOutput {
  std::string key;
  Heatmap3D heatmap;
  Mask3D mask;
};

/// Stage-by-stage driver with content-addressed caching. Each stage key
/// covers the inputs and every configuration field that can change its
/// output, so a repeated run with the same configuration is all cache hits.
class Pipeline {
 public:
  /// `backend` may be null, or present with `offline` set: stages then
  /// only read cached artifacts and a miss raises MissingArtifactError naming
  /// the stage. An offline backend still contributes its identity to keys.
  Pipeline(PipelineConfig config, std::shared_ptr<ModelBackend> backend, bool offline = false);

  const PipelineConfig& config() const { return config_; }
  /// Replaces the hyperparameters that sweeps vary.
  void set_selection(const SelectionConfig& selection);
  void set_tau(double tau);

  const LoadedScene& scene(const std::string& scene_id);

  ParsedTask parse(const std::string& description);
  SelectionOutput select(const std::string& scene_id, const ParsedTask& task);
  SegmentationOutput segment(const std::string& scene_id, const std::string& description,
                             const ParsedTask& task, const SelectionOutput& selection);
  LiftOutput lift(const std::string& scene_id, const SegmentationOutput& segmentation);

  /// Runs every stage for one task. Failures are caught and reported in the
  /// result's status.
  TaskResult run_task(const TaskRecord& task);
  /// Runs all tasks (`jobs` at a time); results keep the input order.
  std::vector<TaskResult> run_tasks(const std::vector<TaskRecord>& tasks);
  /// Metrics over the tasks that carry ground truth.
  static AggregateMetrics evaluate(const std::vector<TaskResult>& results);

  ArtifactCache& cache() { return cache_; }

 private:
  std::string backend_identity() const;
  ModelBackend& require_backend(const char* stage_name);

  PipelineConfig config_;
  std::shared_ptr<ModelBackend> backend_;
  bool offline_ = false;
  ArtifactCache cache_;
  std::string config_digest_;
  std::optional<PromptTemplate> prompt_;

  std::mutex scenes_mutex_;
  std::map<std::string, std::shared_ptr<LoadedScene>> scenes_;
};

/// Loads <dataset_root>/tasks.json.
std::vector<TaskRecord> load_dataset_tasks(const PipelineConfig& config);

/// Runs the whole grid through `pipeline`, re-using cached stages between
/// cells.
std::vector<SweepRow> run_pipeline_sweep(Pipeline& pipeline, const SweepGrid& grid,
                                         const std::vector<TaskRecord>& tasks);

}  // namespace funcseg
