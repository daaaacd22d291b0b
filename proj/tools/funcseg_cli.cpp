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

// funcseg: command-line front end over the staged pipeline.
//
//   funcseg parse   --scene S --description D        ParsedTask JSON
//   funcseg select  --scene S --task-index I         scored views + selection
//   funcseg segment ...                              per-view 2D masks
//   funcseg lift    ... [--export-ply out.ply]       heatmap + 3D mask
//   funcseg run     [--config C]                     whole dataset, metrics
//   funcseg eval    [--config C]                     metrics from cache only
//   funcseg sweep   --grid G [--emit-plot-data P]    hyperparameter grid
//
// Settings are layered: built-in defaults, then --config, then FUNCSEG_*
// environment variables, then flags.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "funcseg/config.hpp"
#include "funcseg/digest.hpp"
#include "funcseg/error.hpp"
#include "funcseg/evaluation.hpp"
#include "funcseg/pipeline.hpp"

namespace fs = std::filesystem;
using namespace funcseg;

namespace {

struct Options {
  std::string config_path;
  std::string dataset;
  std::string cache_dir;
  std::string fixtures;
  std::string record_fixtures;
  std::string backend_url;
  std::optional<int> views;
  std::optional<double> tau;
  std::string lambda;
  std::optional<int> jobs;
  std::string query_mode;
  std::string out_dir = "funcseg_out";
  std::string log_level = "info";

  // Task selection for the single-task subcommands.
  std::string scene;
  std::string task_file;
  std::optional<int> task_index;
  std::string description;

  std::string export_ply;
  std::string grid;
  std::string plot_data;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--dataset", o.dataset, "Dataset root (tasks.json, scenes/)");
  cmd->add_option("--cache-dir", o.cache_dir, "Artifact cache directory");
  cmd->add_option("--fixtures", o.fixtures, "Replay model responses from this fixture store");
  cmd->add_option("--backend-url", o.backend_url, "Base URL of the HTTP model services");
  cmd->add_option("--record-fixtures", o.record_fixtures,
                  "Store every HTTP exchange as a fixture in this directory");
  cmd->add_option("--views", o.views, "View budget");
  cmd->add_option("--tau", o.tau, "Heatmap threshold in [0, 1)");
  cmd->add_option("--lambda", o.lambda, "Score weights m,d,a");
  cmd->add_option("--query-mode", o.query_mode, "with_description | object_only");
  cmd->add_option("--jobs", o.jobs, "Concurrent tasks / views");
  cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--log-level", o.log_level, "trace|debug|info|warn|error|off")
      ->capture_default_str();
}

void add_task_selection(CLI::App* cmd, Options& o) {
  cmd->add_option("--scene", o.scene, "Scene id");
  cmd->add_option("--task-file", o.task_file, "Task file (default: <dataset>/tasks.json)");
  cmd->add_option("--task-index", o.task_index, "Index into the task file");
  cmd->add_option("--description", o.description, "Free-form task description");
}

std::array<double, 3> parse_lambda(const std::string& text) {
  std::array<double, 3> out{};
  std::stringstream ss(text);
  std::string item;
  std::size_t n = 0;
  while (std::getline(ss, item, ',')) {
    if (n == 3) break;
    try {
      std::size_t used = 0;
      out[n] = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("--lambda: '" + item + "' is not a number");
    }
    ++n;
  }
  if (n != 3 || std::getline(ss, item)) throw ConfigError("--lambda expects three values m,d,a");
  return out;
}

PipelineConfig resolve_config(const Options& o) {
  PipelineConfig c = o.config_path.empty() ? PipelineConfig{} : PipelineConfig::load(o.config_path);
  c.apply_environment([](const char* name) { return std::getenv(name); });
  if (!o.dataset.empty()) c.dataset_root = o.dataset;
  if (!o.cache_dir.empty()) c.cache_dir = o.cache_dir;
  if (!o.fixtures.empty()) {
    c.fixture_dir = o.fixtures;
    c.backend_url.clear();
  }
  if (!o.backend_url.empty()) {
    c.backend_url = o.backend_url;
    c.fixture_dir.clear();
  }
  if (!o.record_fixtures.empty()) c.record_fixtures_dir = o.record_fixtures;
  if (o.views) c.selection.max_views = *o.views;
  if (o.tau) c.tau = *o.tau;
  if (!o.lambda.empty()) {
    const auto l = parse_lambda(o.lambda);
    c.selection.lambda_m = l[0];
    c.selection.lambda_d = l[1];
    c.selection.lambda_alpha = l[2];
  }
  if (!o.query_mode.empty()) c.query_mode = query_mode_from_string(o.query_mode);
  if (o.jobs) c.jobs = *o.jobs;
  c.validate();
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path.string(), text);
  spdlog::info("wrote {}", path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

TaskRecord pick_task(const Options& o, const PipelineConfig& c) {
  if (!o.description.empty()) {
    if (o.scene.empty()) throw ConfigError("--description needs --scene");
    if (o.task_index) throw ConfigError("--description and --task-index are exclusive");
    return {o.scene, o.description, std::nullopt};
  }
  const auto tasks = o.task_file.empty() ? load_dataset_tasks(c) : load_task_file(o.task_file);
  std::vector<TaskRecord> candidates;
  for (const auto& t : tasks) {
    if (o.scene.empty() || t.scene_id == o.scene) candidates.push_back(t);
  }
  const int index = o.task_index.value_or(0);
  if (index < 0 || static_cast<std::size_t>(index) >= candidates.size()) {
    throw ConfigError(fmt::format("task index {} out of range: {} task(s){}", index,
                                  candidates.size(), o.scene.empty() ? "" : " in scene " + o.scene));
  }
  return candidates[static_cast<std::size_t>(index)];
}

Pipeline make_pipeline(const PipelineConfig& c, bool offline = false) {
  return Pipeline(c, make_backend(c), offline);
}

void log_cache(Pipeline& p) {
  for (const auto& [stage_name, n] : p.cache().counters()) {
    spdlog::info("cache {}: {} hit(s), {} miss(es)", stage_name, n.hits, n.misses);
  }
}

nlohmann::json selection_json(const SelectionOutput& s) {
  nlohmann::json scored = nlohmann::json::array();
  for (const auto& v : s.scored) scored.push_back(to_json(v));
  return {{"key", s.key}, {"scored_views", scored}, {"selected", s.selected}};
}

int cmd_parse(const Options& o) {
  const auto c = resolve_config(o);
  auto p = make_pipeline(c);
  const auto task = pick_task(o, c);
  std::cout << to_json(p.parse(task.description)).dump(2) << "\n";
  return 0;
}

int cmd_select(const Options& o) {
  const auto c = resolve_config(o);
  auto p = make_pipeline(c);
  const auto task = pick_task(o, c);
  const auto sel = p.select(task.scene_id, p.parse(task.description));
  const auto j = selection_json(sel);
  write_json(fs::path(o.out_dir) / "select.json", j);
  std::cout << nlohmann::json{{"selected", sel.selected}}.dump(2) << "\n";
  log_cache(p);
  return 0;
}

int cmd_segment(const Options& o) {
  const auto c = resolve_config(o);
  auto p = make_pipeline(c);
  const auto task = pick_task(o, c);
  const auto parsed = p.parse(task.description);
  const auto seg = p.segment(task.scene_id, task.description, parsed, p.select(task.scene_id, parsed));
  nlohmann::json summary = {{"key", seg.key}, {"views", nlohmann::json::array()}, {"skipped", seg.skipped}};
  for (const auto& m : seg.masks) {
    write_json(fs::path(o.out_dir) / "masks" / (m.view_id + ".json"), to_json(m));
    summary["views"].push_back({{"view_id", m.view_id}, {"pixels", m.mask.area()}});
  }
  std::cout << summary.dump(2) << "\n";
  log_cache(p);
  return 0;
}

int cmd_lift(const Options& o) {
  const auto c = resolve_config(o);
  auto p = make_pipeline(c);
  const auto task = pick_task(o, c);
  const auto parsed = p.parse(task.description);
  const auto seg = p.segment(task.scene_id, task.description, parsed, p.select(task.scene_id, parsed));
  const auto lifted = p.lift(task.scene_id, seg);
  write_json(fs::path(o.out_dir) / "heatmap.json", to_json(lifted.heatmap));
  write_json(fs::path(o.out_dir) / "mask3d.json", to_json(lifted.mask));
  if (!o.export_ply.empty()) {
    const auto& cloud = p.scene(task.scene_id).scene.cloud;
    save_point_cloud(heatmap_cloud(cloud, lifted.heatmap), o.export_ply, PlyFormat::kBinaryLittleEndian);
    spdlog::info("wrote {}", o.export_ply);
  }
  nlohmann::json summary = {{"points", lifted.mask.point_indices.size()}, {"tau", lifted.mask.tau}};
  if (task.gt_point_indices) {
    const auto s = task_iou(lifted.mask.point_indices, *task.gt_point_indices);
    summary["iou"] = s.iou;
  }
  std::cout << summary.dump(2) << "\n";
  log_cache(p);
  return 0;
}

int report(const Options& o, const std::vector<TaskResult>& results) {
  nlohmann::json tasks = nlohmann::json::array();
  std::size_t failed = 0;
  for (const auto& r : results) {
    tasks.push_back(to_json(r));
    failed += r.status == TaskStatus::kFailed;
  }
  const auto metrics = Pipeline::evaluate(results);
  write_json(fs::path(o.out_dir) / "results.json", {{"tasks", tasks}, {"metrics", to_json(metrics)}});
  write_text(fs::path(o.out_dir) / "metrics.csv", metrics_csv(metrics));
  std::cout << metrics_table(metrics);
  if (failed > 0) {
    std::cout << fmt::format("{} of {} task(s) failed:\n", failed, results.size());
    for (const auto& r : results) {
      if (r.status == TaskStatus::kFailed) {
        std::cout << fmt::format("  [{}] {}: {}\n", r.scene_id, r.description, r.error);
      }
    }
  }
  return 0;
}

int cmd_run(const Options& o) {
  const auto c = resolve_config(o);
  auto p = make_pipeline(c);
  const auto tasks = o.task_file.empty() ? load_dataset_tasks(c) : load_task_file(o.task_file);
  const auto results = p.run_tasks(tasks);
  log_cache(p);
  return report(o, results);
}

int cmd_eval(const Options& o) {
  const auto c = resolve_config(o);
  auto p = make_pipeline(c, /*offline=*/true);
  if (!p.cache().enabled()) throw ConfigError("eval reads cached artifacts; set a cache directory");
  const auto tasks = o.task_file.empty() ? load_dataset_tasks(c) : load_task_file(o.task_file);
  return report(o, p.run_tasks(tasks));
}

int cmd_sweep(const Options& o) {
  const auto c = resolve_config(o);
  const auto bytes = read_file_bytes(o.grid);
  const auto grid = SweepGrid::from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
  auto p = make_pipeline(c);
  const auto tasks = o.task_file.empty() ? load_dataset_tasks(c) : load_task_file(o.task_file);
  const auto rows = run_pipeline_sweep(p, grid, tasks);
  log_cache(p);
  write_text(fs::path(o.out_dir) / "sweep.csv", sweep_csv(rows));
  write_json(fs::path(o.out_dir) / "sweep.json", sweep_json(rows));
  if (!o.plot_data.empty()) write_json(o.plot_data, sweep_plot_data(rows));
  std::cout << sweep_table(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free 3D functionality segmentation over posed RGBD scans"};
  app.require_subcommand(1);
  Options o;

  auto* parse = app.add_subcommand("parse", "Infer functional and contextual objects for a task");
  auto* select = app.add_subcommand("select", "Score and rank views for a task");
  auto* segment = app.add_subcommand("segment", "Segment the functional object in the selected views");
  auto* lift = app.add_subcommand("lift", "Lift 2D masks to a 3D heatmap and mask");
  auto* run = app.add_subcommand("run", "Run every task of the dataset and report metrics");
  auto* eval = app.add_subcommand("eval", "Report metrics from cached artifacts only");
  auto* sweep = app.add_subcommand("sweep", "Evaluate a lambda / view budget / tau grid");
  for (auto* cmd : {parse, select, segment, lift, run, eval, sweep}) add_common(cmd, o);
  for (auto* cmd : {parse, select, segment, lift}) add_task_selection(cmd, o);
  for (auto* cmd : {run, eval, sweep}) cmd->add_option("--task-file", o.task_file, "Task file");
  lift->add_option("--export-ply", o.export_ply, "Write the heatmap as a coloured PLY");
  sweep->add_option("--grid", o.grid, "Grid file {\"lambda\":[[m,d,a]...],\"views\":[...],\"tau\":[...]}")
      ->required();
  sweep->add_option("--emit-plot-data", o.plot_data, "Write (tau, mIoU) series per view budget");

  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("funcseg");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(o.log_level));

  try {
    if (*parse) return cmd_parse(o);
    if (*select) return cmd_select(o);
    if (*segment) return cmd_segment(o);
    if (*lift) return cmd_lift(o);
    if (*run) return cmd_run(o);
    if (*eval) return cmd_eval(o);
    if (*sweep) return cmd_sweep(o);
  } catch (const ConfigError& e) {
    spdlog::error("configuration: {}", e.what());
    return 2;
  } catch (const MissingArtifactError& e) {
    spdlog::error("missing artifact for stage {}: {}", e.stage(), e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
