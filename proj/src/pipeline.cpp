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

#include "funcseg/pipeline.hpp"

#include <chrono>
#include <filesystem>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "funcseg/digest.hpp"
#include "funcseg/error.hpp"
#include "funcseg/parallel.hpp"

namespace funcseg {
namespace {

std::string file_digest(const std::string& path) { return sha256_hex(read_file_bytes(path)); }

nlohmann::json selection_params(const SelectionConfig& s) {
  return {s.lambda_m, s.lambda_d, s.lambda_alpha, s.max_views, s.bins_d, s.bins_alpha};
}

}  // namespace

const View& LoadedScene::view(const std::string& view_id) const {
  for (const auto& v : scene.views) {
    if (v.view_id == view_id) return v;
  }
  throw ContractError("scene '" + scene.manifest.scene_id + "' has no view '" + view_id + "'");
}

const PixelToPointMap& LoadedScene::pixel_map(const std::string& view_id, double radius) const {
  std::call_once(grid_once_, [&] { grid_ = std::make_unique<SpatialHashGrid>(scene.cloud, radius); });
  {
    std::lock_guard lock(maps_mutex_);
    if (auto it = maps_.find(view_id); it != maps_.end()) return *it->second;
  }
  auto built = std::make_shared<const PixelToPointMap>(build_pixel_map(view(view_id), *grid_));
  std::lock_guard lock(maps_mutex_);
  // A concurrent builder may have won; both results are identical.
  return *maps_.emplace(view_id, std::move(built)).first->second;
}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<ModelBackend> backend, bool offline)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      offline_(offline),
      cache_(config_.cache_dir) {
  config_.validate();
  config_digest_ = config_.digest();
  if (!config_.prompt_file.empty()) prompt_ = PromptTemplate::load(config_.prompt_file);
}

void Pipeline::set_selection(const SelectionConfig& selection) {
  selection.validate();
  config_.selection = selection;
  config_digest_ = config_.digest();
}

void Pipeline::set_tau(double tau) {
  if (!(tau >= 0.0 && tau < 1.0)) throw ConfigError(fmt::format("tau = {} outside [0, 1)", tau));
  config_.tau = tau;
  config_digest_ = config_.digest();
}

std::string Pipeline::backend_identity() const {
  return backend_ ? backend_->identity() : std::string("none");
}

ModelBackend& Pipeline::require_backend(const char* stage_name) {
  if (!backend_ || offline_) {
    throw MissingArtifactError(
        stage_name, fmt::format("stage '{}' is not cached and no model backend is available",
                                stage_name));
  }
  return *backend_;
}

const LoadedScene& Pipeline::scene(const std::string& scene_id) {
  std::lock_guard lock(scenes_mutex_);
  if (auto it = scenes_.find(scene_id); it != scenes_.end()) return *it->second;
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(config_.dataset_root) / "scenes" / scene_id;
  auto loaded = std::make_shared<LoadedScene>();
  loaded->scene = load_scene(dir.string(), config_.depth_scale);
  if (loaded->scene.manifest.scene_id != scene_id) {
    throw ValidationError(fmt::format("scene directory '{}' holds manifest for '{}'", scene_id,
                                      loaded->scene.manifest.scene_id));
  }
  std::string material = file_digest((dir / "manifest.json").string());
  material += file_digest((dir / loaded->scene.manifest.point_cloud).string());
  for (const auto& v : loaded->scene.manifest.views) {
    material += file_digest((dir / v.color).string());
    material += file_digest((dir / v.depth).string());
  }
  loaded->digest = sha256_hex(material);
  spdlog::info("scene {}: {} points, {} views", scene_id, loaded->scene.cloud.size(),
               loaded->scene.views.size());
  return *scenes_.emplace(scene_id, std::move(loaded)).first->second;
}

ParsedTask Pipeline::parse(const std::string& description) {
  const PromptTemplate& prompt = prompt_ ? *prompt_ : PromptTemplate::builtin();
  const std::string key = stage_key(
      stage::kParse, {prompt.digest(), description, backend_identity(), config_.parse_retries});
  if (auto hit = cache_.get(stage::kParse, key)) return parsed_task_from_json(*hit);
  ParsedTask parsed =
      understand_task(require_backend(stage::kParse), description, config_.parse_retries, prompt);
  cache_.put(stage::kParse, key, config_digest_, to_json(parsed));
  return parsed;
}

SelectionOutput Pipeline::select(const std::string& scene_id, const ParsedTask& task) {
  const LoadedScene& loaded = scene(scene_id);
  const auto& views = loaded.scene.views;
  const std::string query = task.contextual_object;

  const std::string detect_key =
      stage_key(stage::kDetect, {loaded.digest, query, backend_identity()});
  const std::string select_key =
      stage_key(stage::kSelect, {detect_key, selection_params(config_.selection)});
  SelectionOutput out;
  out.key = select_key;
  if (auto hit = cache_.get(stage::kSelect, select_key)) {
    for (const auto& v : hit->at("scored_views")) out.scored.push_back(scored_view_from_json(v));
    out.selected = hit->at("selected").get<std::vector<std::string>>();
  } else {
    nlohmann::json detections;
    bool complete = true;
    if (auto hit = cache_.get(stage::kDetect, detect_key)) {
      detections = std::move(*hit);
    } else {
      ModelBackend& backend = require_backend(stage::kDetect);
      std::vector<nlohmann::json> per_view(views.size());
      std::vector<std::string> errors(views.size());
      parallel_for(views.size(), config_.jobs, [&](std::size_t i) {
        try {
          const auto response =
              backend.detect_segment({read_file_bytes(views[i].color_path), query});
          per_view[i] = {{"view_id", views[i].view_id}, {"detections", to_json(response)}};
        } catch (const Error& e) {
          errors[i] = e.what();
          per_view[i] = {{"view_id", views[i].view_id}, {"error", e.what()}};
        }
      });
      detections = per_view;
      complete =
          std::all_of(errors.begin(), errors.end(), [](const auto& e) { return e.empty(); });
      for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i].empty()) {
          spdlog::warn("scene {} view {}: detection failed, view skipped: {}", scene_id,
                       views[i].view_id, errors[i]);
        }
      }
      if (complete) cache_.put(stage::kDetect, detect_key, config_digest_, detections);
    }

    for (std::size_t i = 0; i < views.size(); ++i) {
      const auto& entry = detections.at(i);
      std::vector<ContextMask> masks;
      if (entry.contains("detections")) {
        masks = context_masks_from_detections(
            views[i].view_id, parse_detect_segment_response(entry.at("detections"),
                                                            views[i].color_size));
      }
      out.scored.push_back(score_view(views[i].view_id, masks, views[i].color_size,
                                      config_.selection));
    }
    for (const auto& v : select_views(out.scored, config_.selection.max_views)) {
      out.selected.push_back(v.view_id);
    }
    if (complete) {
      nlohmann::json scored = nlohmann::json::array();
      for (const auto& v : out.scored) scored.push_back(to_json(v));
      cache_.put(stage::kSelect, select_key, config_digest_,
                 {{"scene_id", scene_id},
                  {"contextual_object", query},
                  {"scored_views", scored},
                  {"selected", out.selected}});
    }
  }
  if (out.selected.empty()) {
    spdlog::warn("scene {}: contextual object '{}' not found in any view", scene_id, query);
  }
  return out;
}

SegmentationOutput Pipeline::segment(const std::string& scene_id, const std::string& description,
                                     const ParsedTask& task, const SelectionOutput& selection) {
  const LoadedScene& loaded = scene(scene_id);
  const std::string query =
      build_point_query(task.functional_object, description, config_.query_mode);
  SegmentationOutput out;
  out.key = stage_key(stage::kSegment,
                      {loaded.digest, selection.selected, query, backend_identity()});
  if (auto hit = cache_.get(stage::kSegment, out.key)) {
    for (const auto& m : hit->at("masks")) out.masks.push_back(functional_mask_from_json(m));
    return out;
  }
  ModelBackend& backend = require_backend(stage::kSegment);
  const auto& ids = selection.selected;
  std::vector<std::optional<FunctionalMask2D>> results(ids.size());
  std::vector<std::string> errors(ids.size());
  parallel_for(ids.size(), config_.jobs, [&](std::size_t i) {
    try {
      results[i] = segment_functional(loaded.view(ids[i]), query, backend);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  nlohmann::json masks = nlohmann::json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!errors[i].empty()) {
      spdlog::warn("scene {} view {}: functional segmentation failed, view skipped: {}", scene_id,
                   ids[i], errors[i]);
      out.skipped.push_back(ids[i]);
    } else if (results[i]) {
      masks.push_back(to_json(*results[i]));
      out.masks.push_back(std::move(*results[i]));
    }
  }
  if (out.skipped.empty()) {
    cache_.put(stage::kSegment, out.key, config_digest_, {{"query", query}, {"masks", masks}});
  }
  return out;
}

LiftOutput Pipeline::lift(const std::string& scene_id, const SegmentationOutput& segmentation) {
  const LoadedScene& loaded = scene(scene_id);
  LiftOutput out;
  out.key = stage_key(stage::kLift, {loaded.digest, segmentation.key, config_.lift_radius,
                                     config_.depth_scale ? nlohmann::json(*config_.depth_scale)
                                                         : nlohmann::json(nullptr)});
  if (auto hit = cache_.get(stage::kLift, out.key)) {
    out.heatmap = heatmap_from_json(*hit);
  } else {
    std::vector<PixelToPointMap> maps(segmentation.masks.size());
    parallel_for(maps.size(), config_.jobs, [&](std::size_t k) {
      maps[k] = loaded.pixel_map(segmentation.masks[k].view_id, config_.lift_radius);
    });
    out.heatmap = accumulate(segmentation.masks, maps, config_.jobs);
    cache_.put(stage::kLift, out.key, config_digest_, to_json(out.heatmap));
  }
  const std::string threshold_key = stage_key(stage::kThreshold, {out.key, config_.tau});
  if (auto hit = cache_.get(stage::kThreshold, threshold_key)) {
    out.mask = mask3d_from_json(*hit);
  } else {
    out.mask = threshold(out.heatmap, config_.tau);
    cache_.put(stage::kThreshold, threshold_key, config_digest_, to_json(out.mask));
  }
  return out;
}

TaskResult Pipeline::run_task(const TaskRecord& task) {
  const auto started = std::chrono::steady_clock::now();
  TaskResult result;
  result.scene_id = task.scene_id;
  result.description = task.description;
  result.predicted.tau = config_.tau;
  if (task.gt_point_indices) result.gt = *task.gt_point_indices;
  try {
    const ParsedTask parsed = parse(task.description);
    const SelectionOutput selection = select(task.scene_id, parsed);
    const SegmentationOutput segmentation =
        segment(task.scene_id, task.description, parsed, selection);
    const LiftOutput lifted = lift(task.scene_id, segmentation);
    result.predicted = lifted.mask;
    double heat = 0.0;
    for (std::uint32_t idx : lifted.mask.point_indices) heat += lifted.heatmap.normalized.at(idx);
    result.confidence = lifted.mask.point_indices.empty()
                            ? 0.0
                            : heat / static_cast<double>(lifted.mask.point_indices.size());
  } catch (const MissingArtifactError&) {
    throw;
  } catch (const Error& e) {
    result.status = TaskStatus::kFailed;
    result.error = e.what();
    spdlog::error("task '{}' ({}): {}", task.description, task.scene_id, e.what());
  }
  if (!result.gt.empty()) result.overlap = task_iou(result.predicted.point_indices, result.gt);
  const auto elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  spdlog::info("task '{}' ({}): {} in {:.3f}s, {} points, IoU {:.3f}", task.description,
               task.scene_id, result.status == TaskStatus::kOk ? "ok" : "failed", elapsed,
               result.predicted.point_indices.size(), result.overlap.iou);
  return result;
}

std::vector<TaskResult> Pipeline::run_tasks(const std::vector<TaskRecord>& tasks) {
  for (const auto& t : tasks) t.validate_against(scene(t.scene_id).scene.cloud);
  std::vector<TaskResult> results(tasks.size());
  parallel_for(tasks.size(), config_.jobs, [&](std::size_t i) { results[i] = run_task(tasks[i]); });
  return results;
}

AggregateMetrics Pipeline::evaluate(const std::vector<TaskResult>& results) {
  std::vector<TaskResult> scored;
  for (const auto& r : results) {
    if (!r.gt.empty()) scored.push_back(r);
  }
  if (scored.empty()) throw ContractError("evaluate: no task carries ground truth");
  return aggregate(scored);
}

std::vector<TaskRecord> load_dataset_tasks(const PipelineConfig& config) {
  return load_task_file(
      (std::filesystem::path(config.dataset_root) / "tasks.json").string());
}

std::vector<SweepRow> run_pipeline_sweep(Pipeline& pipeline, const SweepGrid& grid,
                                         const std::vector<TaskRecord>& tasks) {
  SweepCell base{pipeline.config().selection, pipeline.config().tau};
  return run_sweep(grid, base, [&](const SweepCell& cell) {
    pipeline.set_selection(cell.selection);
    pipeline.set_tau(cell.tau);
    return Pipeline::evaluate(pipeline.run_tasks(tasks));
  });
}

}  // namespace funcseg
