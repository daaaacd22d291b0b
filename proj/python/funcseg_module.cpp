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

// Python bindings. Structured results cross the boundary as JSON text and
// are decoded on the Python side.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <spdlog/spdlog.h>

#include "funcseg/config.hpp"
#include "funcseg/error.hpp"
#include "funcseg/evaluation.hpp"
#include "funcseg/functional_seg.hpp"
#include "funcseg/lifting.hpp"
#include "funcseg/pipeline.hpp"
#include "funcseg/scene_io.hpp"
#include "funcseg/task_parsing.hpp"
#include "funcseg/view_selection.hpp"

namespace py = pybind11;
using namespace funcseg;

namespace {

SelectionConfig selection(double lm, double ld, double la, int views = 50) {
  SelectionConfig c;
  c.lambda_m = lm;
  c.lambda_d = ld;
  c.lambda_alpha = la;
  c.max_views = views;
  c.validate();
  return c;
}

std::vector<PixelCoord> to_pixels(const std::vector<std::pair<int, int>>& xy) {
  std::vector<PixelCoord> out;
  out.reserve(xy.size());
  for (const auto& [x, y] : xy) out.push_back({x, y});
  return out;
}

BinaryMask mask_from_array(const py::array_t<bool, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw ContractError("mask must be a 2-D array (height, width)");
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  BinaryMask m({w, h});
  const auto r = a.unchecked<2>();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (r(y, x)) m.set(x, y);
    }
  }
  return m;
}

std::string lift_masks(const std::string& scene_dir, const py::dict& masks, double radius,
                       double tau, int jobs) {
  const Scene scene = load_scene(scene_dir);
  std::vector<FunctionalMask2D> fmasks;
  for (const auto& [key, value] : masks) {
    fmasks.push_back({py::cast<std::string>(key),
                      mask_from_array(py::cast<py::array_t<bool, py::array::c_style | py::array::forcecast>>(value)),
                      {}});
  }
  py::gil_scoped_release release;
  const SpatialHashGrid grid(scene.cloud, radius);
  std::vector<PixelToPointMap> maps;
  for (const auto& m : fmasks) {
    const auto it = std::find_if(scene.views.begin(), scene.views.end(),
                                 [&](const View& v) { return v.view_id == m.view_id; });
    if (it == scene.views.end()) throw ContractError("scene has no view '" + m.view_id + "'");
    maps.push_back(build_pixel_map(*it, grid));
  }
  const Heatmap3D heat = accumulate(fmasks, maps, jobs);
  return nlohmann::json({{"heatmap", to_json(heat)}, {"mask", to_json(threshold(heat, tau))}}).dump();
}

std::string run_pipeline(const std::string& config_path, const std::optional<std::string>& task_file,
                         const std::optional<std::string>& cache_dir, std::optional<int> jobs,
                         bool offline) {
  PipelineConfig c = PipelineConfig::load(config_path);
  if (cache_dir) c.cache_dir = *cache_dir;
  if (jobs) c.jobs = *jobs;
  c.validate();
  py::gil_scoped_release release;
  Pipeline p(c, make_backend(c), offline);
  const auto tasks = task_file ? load_task_file(*task_file) : load_dataset_tasks(c);
  const auto results = p.run_tasks(tasks);
  nlohmann::json out = {{"tasks", nlohmann::json::array()},
                        {"metrics", to_json(Pipeline::evaluate(results))}};
  for (const auto& r : results) out["tasks"].push_back(to_json(r));
  return out.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Training-free 3D functionality segmentation";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<TransportError>(m, "TransportError", base.ptr());
  py::register_exception<FixtureMissError>(m, "FixtureMissError", base.ptr());
  py::register_exception<MissingArtifactError>(m, "MissingArtifactError", base.ptr());

  m.def("set_log_level", [](const std::string& level) {
    spdlog::set_level(spdlog::level::from_str(level));
  });

  m.def("combine_scores",
        [](double s_m, double s_d, double s_a, double lm, double ld, double la) {
          return combine_scores(s_m, s_d, s_a, selection(lm, ld, la));
        },
        py::arg("s_m"), py::arg("s_d"), py::arg("s_alpha"), py::arg("lambda_m") = 0.5,
        py::arg("lambda_d") = 0.25, py::arg("lambda_alpha") = 0.25);

  m.def("distribution_scores",
        [](const std::vector<std::pair<int, int>>& pixels, int width, int height, int bins_d,
           int bins_alpha) {
          const auto px = to_pixels(pixels);
          const auto s = distribution_scores(polar_coordinates(px, {width, height}), bins_d, bins_alpha);
          return std::make_pair(s.distance, s.angle);
        },
        py::arg("pixels"), py::arg("width"), py::arg("height"), py::arg("bins_d") = 16,
        py::arg("bins_alpha") = 16);

  m.def("score_mask",
        [](const std::vector<std::pair<int, int>>& pixels, double confidence, int width, int height,
           double lm, double ld, double la) {
          const ContextMask mask{"", to_pixels(pixels), confidence};
          const auto s = score_mask(mask, {width, height}, selection(lm, ld, la));
          py::dict d;
          d["s_m"] = s.confidence;
          d["s_d"] = s.distance;
          d["s_alpha"] = s.angle;
          d["s_total"] = s.total;
          return d;
        },
        py::arg("pixels"), py::arg("confidence"), py::arg("width"), py::arg("height"),
        py::arg("lambda_m") = 0.5, py::arg("lambda_d") = 0.25, py::arg("lambda_alpha") = 0.25);

  m.def("select_views",
        [](const std::vector<std::pair<std::string, double>>& scores, int max_views) {
          std::vector<ScoredView> views;
          for (const auto& [id, s] : scores) views.push_back({id, s, std::nullopt, {}});
          std::vector<std::string> out;
          for (const auto& v : select_views(std::move(views), max_views)) out.push_back(v.view_id);
          return out;
        },
        py::arg("scores"), py::arg("max_views") = 50);

  m.def("_parse_llm_response",
        [](const std::string& text) { return to_json(parse_response(text)).dump(); });
  m.def("build_prompt", [](const std::string& description) {
    const auto r = build_prompt(description);
    return std::make_pair(r.system, r.user);
  });
  m.def("build_point_query",
        [](const std::string& f, const std::string& d, const std::string& mode) {
          return build_point_query(f, d, query_mode_from_string(mode));
        },
        py::arg("functional_object"), py::arg("description"), py::arg("mode") = "with_description");

  m.def("_lift", &lift_masks, py::arg("scene_dir"), py::arg("masks"), py::arg("radius") = 0.02,
        py::arg("tau") = 0.7, py::arg("jobs") = 1);

  m.def("task_iou",
        [](const std::vector<std::uint32_t>& pred, const std::vector<std::uint32_t>& gt) {
          const auto s = task_iou(pred, gt);
          return py::make_tuple(s.iou, s.precision, s.recall);
        });
  m.def("_aggregate_ious",
        [](const std::vector<double>& ious) { return to_json(aggregate_ious(ious)).dump(); });

  m.def("_run", &run_pipeline, py::arg("config_path"), py::arg("task_file") = py::none(),
        py::arg("cache_dir") = py::none(), py::arg("jobs") = py::none(), py::arg("offline") = false);

  m.attr("DEFAULT_TAU") = kDefaultTau;
  m.attr("DEFAULT_LIFT_RADIUS") = kDefaultLiftRadius;
}
