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

// Generates the bundled desk-scale dataset: two synthetic box-world scenes
// rendered into posed RGBD views, a task file with ground truth, and a
// fixture store with simulated responses for every request the pipeline can
// issue under any view selection.
//
// Simulated model behaviour:
//  * chat: a canned reply per task description.
//  * detect_segment: one mask per visible object that answers to the query.
//    Each object carries a base confidence per category it can be mistaken
//    for; every image border its silhouette touches adds to it, so truncated
//    views look confident and look-alike objects look well framed.
//  * point: the functional object's most central visible pixel when that
//    object is large enough and sits in the central part of the image;
//    otherwise the most central visible distractor of the same kind;
//    otherwise nothing. Object-only queries point at every visible instance
//    of the category.
//  * segment_points: the union of the objects under the prompt pixels.
//
// Surfaces facing away from every camera (backs against walls, undersides
// of small parts) are not sampled, as a scanner would not see them.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "funcseg/digest.hpp"
#include "funcseg/functional_seg.hpp"
#include "funcseg/mask.hpp"
#include "funcseg/model_backends.hpp"
#include "funcseg/png_io.hpp"
#include "funcseg/scene_io.hpp"
#include "funcseg/task_parsing.hpp"

namespace fs = std::filesystem;
using namespace funcseg;

namespace {

constexpr int kColorWidth = 512;
constexpr int kColorHeight = 384;
constexpr int kDepthDownsample = 2;
constexpr double kFocal = 450.0;
constexpr int kMinDetectPixels = 60;
constexpr int kMinPointPixels = 12;
constexpr double kTruncationBonus = 0.12;

enum Face : unsigned { kXMin = 1, kXMax = 2, kYMin = 4, kYMax = 8, kZMin = 16, kZMax = 32 };
constexpr unsigned kAllFaces = 63;

struct Box {
  std::string name;
  std::string category;
  Point3 lo, hi;
  double spacing;
  unsigned faces;  // faces sampled into the point cloud
  Rgb color;
  /// Detector base confidence per query this object answers to.
  std::map<std::string, double> detect_as = {};
};

struct Camera {
  Point3 position;
  Point3 target;
};

struct TaskSpec {
  std::string scene;
  std::string description;
  std::string functional;  // F as the LLM names it
  std::string gt_box;
  std::vector<std::string> distractors;
  std::string llm_reply;
};

struct SceneSpec {
  std::string id;
  std::vector<Box> boxes;
  std::vector<Camera> cameras;
};

Point3 sub(Point3 a, Point3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Point3 cross(Point3 a, Point3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
Point3 normalized(Point3 a) {
  const double n = std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z);
  return {a.x / n, a.y / n, a.z / n};
}

CameraPose look_at(const Camera& cam) {
  const Point3 forward = normalized(sub(cam.target, cam.position));
  const Point3 right = normalized(cross(forward, {0, 0, 1}));
  const Point3 down = cross(forward, right);
  CameraPose pose;
  pose.rotation = {right.x, down.x, forward.x, right.y, down.y, forward.y,
                   right.z, down.z, forward.z};
  pose.translation = {cam.position.x, cam.position.y, cam.position.z};
  return pose;
}

/// Slab intersection; returns the entry distance along dir for t > 0.
std::optional<double> intersect(const Box& b, Point3 o, Point3 d) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  const double os[3] = {o.x, o.y, o.z}, ds[3] = {d.x, d.y, d.z};
  const double lo[3] = {b.lo.x, b.lo.y, b.lo.z}, hi[3] = {b.hi.x, b.hi.y, b.hi.z};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(ds[a]) < 1e-12) {
      if (os[a] < lo[a] || os[a] > hi[a]) return std::nullopt;
      continue;
    }
    double ta = (lo[a] - os[a]) / ds[a], tb = (hi[a] - os[a]) / ds[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (t0 <= 1e-9) return std::nullopt;
  return t0;
}

struct Render {
  ImageSize size;
  std::vector<int> label;     // box index, -1 for background
  std::vector<double> depth;  // camera z, 0 for background
};

Render render(const SceneSpec& scene, const CameraIntrinsics& K, const CameraPose& pose) {
  Render r{{K.width, K.height}, {}, {}};
  r.label.assign(static_cast<std::size_t>(K.width) * K.height, -1);
  r.depth.assign(r.label.size(), 0.0);
  const Point3 origin{pose.translation[0], pose.translation[1], pose.translation[2]};
  const auto& R = pose.rotation;
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const double u = (x - K.cx) / K.fx, v = (y - K.cy) / K.fy;
      const Point3 dir{R[0] * u + R[1] * v + R[2], R[3] * u + R[4] * v + R[5],
                       R[6] * u + R[7] * v + R[8]};
      double best = std::numeric_limits<double>::infinity();
      int best_label = -1;
      for (std::size_t b = 0; b < scene.boxes.size(); ++b) {
        if (auto t = intersect(scene.boxes[b], origin, dir); t && *t < best) {
          best = *t;
          best_label = static_cast<int>(b);
        }
      }
      if (best_label >= 0) {
        const std::size_t i = static_cast<std::size_t>(y) * K.width + x;
        r.label[i] = best_label;
        r.depth[i] = best;  // dir has unit camera-z component
      }
    }
  }
  return r;
}

std::vector<std::uint32_t> sample_box(const Box& b, PointCloud& cloud) {
  std::vector<std::uint32_t> indices;
  auto axis_samples = [&](double lo, double hi) {
    const int n = std::max(1, static_cast<int>(std::round((hi - lo) / b.spacing)));
    std::vector<double> out;
    for (int i = 0; i <= n; ++i) out.push_back(lo + (hi - lo) * i / n);
    return out;
  };
  const auto xs = axis_samples(b.lo.x, b.hi.x);
  const auto ys = axis_samples(b.lo.y, b.hi.y);
  const auto zs = axis_samples(b.lo.z, b.hi.z);
  auto add = [&](double x, double y, double z) {
    indices.push_back(static_cast<std::uint32_t>(cloud.points.size()));
    cloud.points.push_back({x, y, z});
    cloud.colors.push_back(b.color);
  };
  for (double y : ys)
    for (double z : zs) {
      if (b.faces & kXMin) add(b.lo.x, y, z);
      if (b.faces & kXMax) add(b.hi.x, y, z);
    }
  for (double x : xs)
    for (double z : zs) {
      if (b.faces & kYMin) add(x, b.lo.y, z);
      if (b.faces & kYMax) add(x, b.hi.y, z);
    }
  for (double x : xs)
    for (double y : ys) {
      if (b.faces & kZMin) add(x, y, b.lo.z);
      if (b.faces & kZMax) add(x, y, b.hi.z);
    }
  return indices;
}

int box_index(const SceneSpec& scene, const std::string& name) {
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    if (scene.boxes[i].name == name) return static_cast<int>(i);
  }
  throw std::runtime_error("unknown box " + name);
}

BinaryMask object_mask(const Render& r, int label) {
  BinaryMask m(r.size);
  for (int y = 0; y < r.size.height; ++y)
    for (int x = 0; x < r.size.width; ++x)
      if (r.label[static_cast<std::size_t>(y) * r.size.width + x] == label) m.set(x, y);
  return m;
}

int borders_touched(const BinaryMask& m) {
  bool left = false, right = false, top = false, bottom = false;
  for (int y = 0; y < m.height(); ++y) {
    left |= m.at(0, y);
    right |= m.at(m.width() - 1, y);
  }
  for (int x = 0; x < m.width(); ++x) {
    top |= m.at(x, 0);
    bottom |= m.at(x, m.height() - 1);
  }
  return left + right + top + bottom;
}

/// Visible pixel closest to the centroid of the visible region.
std::optional<PixelCoord> central_pixel(const BinaryMask& m) {
  const auto pixels = m.pixels();
  if (pixels.empty()) return std::nullopt;
  double cx = 0, cy = 0;
  for (const auto& p : pixels) {
    cx += p.x;
    cy += p.y;
  }
  cx /= pixels.size();
  cy /= pixels.size();
  PixelCoord best = pixels.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& p : pixels) {
    const double d = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
    if (d < best_d) {
      best_d = d;
      best = p;
    }
  }
  return best;
}

/// Chebyshev distance from the image centre in normalized coordinates.
double off_center(PixelCoord p, ImageSize s) {
  const double u = (p.x - s.width / 2.0) / (s.width / 2.0);
  const double v = (p.y - s.height / 2.0) / (s.height / 2.0);
  return std::max(std::abs(u), std::abs(v));
}

Rgb8Image shade(const Render& r, const SceneSpec& scene) {
  Rgb8Image img{r.size, std::vector<std::uint8_t>(static_cast<std::size_t>(r.size.width) * r.size.height * 3, 0)};
  for (std::size_t i = 0; i < r.label.size(); ++i) {
    Rgb c{200, 220, 235};
    if (r.label[i] >= 0) {
      c = scene.boxes[static_cast<std::size_t>(r.label[i])].color;
      const double fade = std::clamp(1.1 - 0.12 * r.depth[i], 0.5, 1.0);
      for (auto& ch : c) ch = static_cast<std::uint8_t>(std::lround(ch * fade));
    }
    std::copy(c.begin(), c.end(), img.pixels.begin() + static_cast<std::ptrdiff_t>(3 * i));
  }
  return img;
}

std::vector<Camera> orbit(Point3 center, std::initializer_list<std::array<double, 3>> az_dist_h,
                          Point3 aim_offset = {0, 0, 0}) {
  std::vector<Camera> cams;
  for (const auto& [az_deg, dist, h] : az_dist_h) {
    const double az = az_deg * std::numbers::pi / 180.0;
    cams.push_back({{center.x + dist * std::sin(az), center.y - dist * std::cos(az), h},
                    {center.x + aim_offset.x, center.y + aim_offset.y, center.z + aim_offset.z}});
  }
  return cams;
}

std::string reply(const std::vector<std::string>& steps, const std::string& acted,
                  const std::vector<std::string>& hierarchy) {
  nlohmann::json j = {{"task_solving_sequence", steps},
                      {"acted_on_object", acted},
                      {"acted_on_object_hierarchy", hierarchy}};
  return j.dump(2);
}

std::vector<SceneSpec> build_scenes() {
  const unsigned no_back = kAllFaces & ~kYMax;
  const unsigned no_bottom_back = kAllFaces & ~kYMax & ~kZMin;
  SceneSpec kitchen;
  kitchen.id = "kitchen";
  kitchen.boxes = {
      {"floor", "floor", {-2.5, -3.5, -0.02}, {3.5, 1.0, 0.0}, 0.04, kZMax, {150, 130, 110}},
      {"wall", "wall", {-2.5, 1.0, 0.0}, {3.5, 1.02, 2.2}, 0.04, kYMin, {230, 225, 210}},
      {"cabinet", "cabinet", {-0.4, 0.5, 0.0}, {0.4, 1.0, 0.8}, 0.02, no_bottom_back, {120, 80, 50},
       {{"cabinet", 0.40}}},
      {"handle_bottom", "handle", {-0.1, 0.46, 0.2}, {0.1, 0.5, 0.24}, 0.015, no_bottom_back,
       {210, 210, 215}},
      {"handle_top", "handle", {-0.1, 0.46, 0.56}, {0.1, 0.5, 0.6}, 0.015, no_bottom_back,
       {205, 205, 210}},
      {"tv", "tv", {-0.35, 0.7, 0.8}, {0.35, 0.75, 1.2}, 0.02, no_bottom_back, {30, 30, 35},
       {{"tv", 0.45}}},
      {"tv_button", "power button", {0.25, 0.68, 0.82}, {0.31, 0.7, 0.85}, 0.01, no_bottom_back,
       {200, 40, 40}},
      // Same kind of furniture without the TV: a weak, well-framed "cabinet".
      {"cabinet2", "cabinet", {1.3, 0.5, 0.0}, {2.2, 1.0, 0.7}, 0.02, no_bottom_back,
       {125, 85, 55}, {{"cabinet", 0.12}}},
      {"handle2", "handle", {1.65, 0.46, 0.43}, {1.85, 0.5, 0.47}, 0.015, no_bottom_back,
       {212, 212, 216}},
      {"picture", "picture", {-1.7, 0.98, 1.0}, {-1.1, 1.0, 1.4}, 0.02, kYMin, {60, 60, 80},
       {{"tv", 0.15}}},
  };
  const Point3 cab{0.0, 0.75, 0.45};
  kitchen.cameras = orbit(cab, {{-50, 1.8, 1.0}, {-37, 1.9, 1.2}, {-24, 1.7, 0.9},
                                {-12, 2.0, 1.3}, {0, 1.8, 1.1}, {12, 1.9, 0.9},
                                {25, 1.7, 1.2}, {38, 2.0, 1.0}, {50, 1.8, 1.3}});
  // Truncated framings: the cabinet sits at an image border.
  for (const auto& c : orbit(cab, {{-20, 1.8, 1.2}}, {0.1, 0.0, 0.75})) kitchen.cameras.push_back(c);
  for (const auto& c : orbit(cab, {{18, 1.7, 1.1}}, {-0.8, 0.0, 0.3})) kitchen.cameras.push_back(c);
  for (const auto& c : orbit(cab, {{5, 1.8, 1.25}}, {0.8, 0.0, 0.55})) kitchen.cameras.push_back(c);
  // The cabinet without a TV, and the picture on the wall.
  for (const auto& c : orbit({1.75, 0.75, 0.35},
                             {{-14, 1.8, 0.9}, {-3, 1.9, 1.0}, {9, 1.8, 0.8}, {20, 1.9, 0.95}})) {
    kitchen.cameras.push_back(c);
  }
  kitchen.cameras.push_back({{-1.4, -0.6, 1.3}, {-1.4, 1.0, 1.2}});

  SceneSpec bedroom;
  bedroom.id = "bedroom";
  bedroom.boxes = {
      {"floor", "floor", {-3.0, -4.0, -0.02}, {3.5, 1.0, 0.0}, 0.04, kZMax, {140, 120, 100}},
      {"wall", "wall", {-3.0, 1.0, 0.0}, {3.5, 1.02, 2.6}, 0.04, kYMin, {220, 230, 215}},
      {"door", "door", {-1.5, 0.95, 0.0}, {-0.7, 1.0, 2.0}, 0.02, kYMin, {160, 110, 70},
       {{"door", 0.40}}},
      {"door_handle", "handle", {-0.9, 0.91, 0.95}, {-0.8, 0.95, 0.99}, 0.015, no_back,
       {215, 200, 120}},
      {"nightstand", "nightstand", {0.3, 0.55, 0.0}, {0.8, 1.0, 0.6}, 0.02, no_bottom_back,
       {100, 70, 45}, {{"nightstand", 0.40}}},
      {"knob_top", "knob", {0.53, 0.52, 0.42}, {0.57, 0.55, 0.46}, 0.01, no_bottom_back,
       {220, 190, 90}},
      {"knob_bottom", "knob", {0.53, 0.52, 0.17}, {0.57, 0.55, 0.21}, 0.01, no_bottom_back,
       {222, 192, 92}},
      // Wardrobe doors answer weakly to "door".
      {"wardrobe", "wardrobe", {1.6, 0.4, 0.0}, {2.4, 1.0, 1.8}, 0.02, no_bottom_back,
       {180, 160, 130}, {{"door", 0.12}}},
      {"wardrobe_handle", "handle", {1.95, 0.36, 0.9}, {1.99, 0.4, 1.1}, 0.015, no_back,
       {210, 210, 210}},
      // A dresser answers weakly to "nightstand".
      {"dresser", "dresser", {-2.8, 0.5, 0.0}, {-2.0, 1.0, 0.6}, 0.02, no_bottom_back,
       {110, 75, 50}, {{"nightstand", 0.12}}},
      {"dresser_knob", "knob", {-2.42, 0.47, 0.28}, {-2.38, 0.5, 0.32}, 0.01, no_bottom_back,
       {221, 191, 91}},
  };
  const Point3 door{-1.1, 0.97, 1.0};
  bedroom.cameras = orbit(door, {{-30, 3.0, 1.2}, {-15, 3.2, 1.4}, {0, 2.9, 1.0},
                                 {15, 3.1, 1.3}, {30, 3.0, 1.1}});
  for (const auto& c : orbit(door, {{10, 3.0, 1.6}}, {1.0, 0.0, 0.3})) bedroom.cameras.push_back(c);
  for (const auto& c : orbit(door, {{-10, 3.0, 1.0}}, {-1.0, 0.0, -0.2})) bedroom.cameras.push_back(c);
  const Point3 stand{0.55, 0.78, 0.32};
  for (const auto& c : orbit(stand, {{-35, 1.4, 0.9}, {-18, 1.3, 0.8}, {0, 1.5, 1.0},
                                     {18, 1.35, 0.75}, {35, 1.4, 0.95}})) {
    bedroom.cameras.push_back(c);
  }
  for (const auto& c : orbit(stand, {{-5, 1.4, 0.9}}, {0.55, 0.0, 0.3})) bedroom.cameras.push_back(c);
  for (const auto& c : orbit(stand, {{12, 1.3, 0.7}}, {-0.55, 0.0, 0.35})) bedroom.cameras.push_back(c);
  for (const auto& c : orbit({2.0, 0.7, 0.9}, {{-12, 3.0, 1.2}, {0, 3.1, 1.0}, {12, 3.0, 1.1}})) {
    bedroom.cameras.push_back(c);
  }
  for (const auto& c : orbit({-2.4, 0.75, 0.3}, {{-8, 1.6, 0.9}, {8, 1.7, 1.0}})) {
    bedroom.cameras.push_back(c);
  }
  return {kitchen, bedroom};
}

std::vector<TaskSpec> build_tasks() {
  return {
      {"kitchen", "open the bottom drawer of the cabinet with the TV on top", "handle",
       "handle_bottom", {"handle_top", "handle2"},
       reply({"locate the cabinet with the TV on top", "find the bottom drawer", "grasp the handle",
              "pull the handle"},
             "handle", {"cabinet", "drawer", "handle"})},
      {"kitchen", "turn on the TV", "power button", "tv_button", {},
       "Sure! Here is the json you asked for:\n" +
           reply({"locate the TV", "find the power button", "press the power button"},
                 "power button", {"TV", "power button"})},
      {"bedroom", "open the door", "handle", "door_handle", {"wardrobe_handle"},
       reply({"walk to the door", "grasp the handle", "turn the handle", "push the door"}, "handle",
             {"handle", "door"})},
      {"bedroom", "open the top drawer of the nightstand", "knob", "knob_top", {"knob_bottom", "dresser_knob"},
       "```json\n" +
           reply({"locate the nightstand", "find the top drawer", "pinch the knob", "pull"},
                 "knob", {"nightstand", "top drawer", "knob"}) +
           "\n```"},
  };
}

struct RenderedView {
  std::string view_id;
  CameraIntrinsics intrinsics;
  CameraPose pose;
  Render color_render;
  std::vector<std::uint8_t> color_png;
};

class FixtureWriter {
 public:
  explicit FixtureWriter(std::string dir) : dir_(std::move(dir)) {}
  void add(Endpoint endpoint, const nlohmann::json& canonical, const nlohmann::json& response) {
    const std::string digest = request_digest(canonical);
    validate_raw_response(endpoint, response, canonical);
    if (written_.insert(digest).second) write_fixture(dir_, {digest, endpoint, canonical, response});
  }
  std::size_t count() const { return written_.size(); }

 private:
  std::string dir_;
  std::set<std::string> written_;
};

void simulate_pointing(const SceneSpec& scene, const TaskSpec& task, const RenderedView& view,
                       QueryMode mode, FixtureWriter& fixtures) {
  const Render& r = view.color_render;
  std::vector<PixelCoord> prompts;
  auto visible = [&](const std::string& name) -> std::optional<PixelCoord> {
    const BinaryMask m = object_mask(r, box_index(scene, name));
    if (m.area() < static_cast<std::size_t>(kMinPointPixels)) return std::nullopt;
    return central_pixel(m);
  };
  if (mode == QueryMode::kWithDescription) {
    const BinaryMask gt = object_mask(r, box_index(scene, task.gt_box));
    const auto gt_px = central_pixel(gt);
    if (gt_px && gt.area() >= kMinPointPixels && off_center(*gt_px, r.size) <= 0.6) {
      prompts.push_back(*gt_px);
    } else {
      std::optional<PixelCoord> best;
      for (const auto& d : task.distractors) {
        const auto q = visible(d);
        if (q && (!best || off_center(*q, r.size) < off_center(*best, r.size))) best = q;
      }
      if (best) prompts.push_back(*best);
    }
  } else {
    for (const auto& b : scene.boxes) {
      const Box& gt = scene.boxes[static_cast<std::size_t>(box_index(scene, task.gt_box))];
      if (b.category != gt.category) continue;
      if (auto p = visible(b.name)) prompts.push_back(*p);
    }
  }
  PointResponse pointed;
  for (const auto& p : prompts) {
    pointed.points.push_back({static_cast<double>(p.x) / r.size.width,
                              static_cast<double>(p.y) / r.size.height});
  }
  const PointRequest point_request{view.color_png,
                                   build_point_query(task.functional, task.description, mode)};
  fixtures.add(Endpoint::kPoint, canonical_request(point_request), to_json(pointed));
  if (prompts.empty()) return;

  SegmentPointsRequest seg_request{view.color_png, {}};
  BinaryMask mask(r.size);
  for (const auto& np : pointed.points) {
    const PixelCoord px = denormalize(np, r.size);
    seg_request.points.push_back(px);
    const int label = r.label[static_cast<std::size_t>(px.y) * r.size.width + px.x];
    const BinaryMask obj = object_mask(r, label);
    for (const auto& q : obj.pixels()) mask.set(q.x, q.y);
  }
  fixtures.add(Endpoint::kSegmentPoints, canonical_request(seg_request),
               to_json(SegmentPointsResponse{rle_encode(mask)}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic desk-scale dataset with replay fixtures"};
  std::string out_dir;
  app.add_option("output", out_dir, "Output directory")->required();
  CLI11_PARSE(app, argc, argv);

  const auto scenes = build_scenes();
  const auto tasks = build_tasks();
  fs::create_directories(out_dir);
  FixtureWriter fixtures((fs::path(out_dir) / "fixtures").string());

  std::vector<TaskRecord> records;
  for (const auto& scene : scenes) {
    const fs::path scene_dir = fs::path(out_dir) / "scenes" / scene.id;
    fs::create_directories(scene_dir / "color");
    fs::create_directories(scene_dir / "depth");

    PointCloud cloud;
    cloud.scene_id = scene.id;
    std::map<std::string, std::vector<std::uint32_t>> box_points;
    for (const auto& b : scene.boxes) box_points[b.name] = sample_box(b, cloud);
    save_point_cloud(cloud, (scene_dir / "cloud.ply").string(), PlyFormat::kBinaryLittleEndian);

    SceneManifest manifest{scene.id, "cloud.ply", kDefaultDepthScale, {}};
    std::vector<RenderedView> views;
    for (std::size_t c = 0; c < scene.cameras.size(); ++c) {
      RenderedView v;
      v.view_id = fmt::format("{}_{:03d}", scene.id, c);
      v.intrinsics = {kFocal, kFocal, kColorWidth / 2.0 - 0.5, kColorHeight / 2.0 - 0.5,
                      kColorWidth, kColorHeight, kDepthDownsample};
      v.pose = look_at(scene.cameras[c]);
      v.color_render = render(scene, v.intrinsics, v.pose);
      v.color_png = encode_png_rgb8(shade(v.color_render, scene));
      const Render depth_render = render(scene, v.intrinsics.at_depth_resolution(), v.pose);
      Gray16Image depth{depth_render.size, {}};
      for (double z : depth_render.depth) {
        depth.pixels.push_back(static_cast<std::uint16_t>(std::clamp(std::lround(z * 1000.0), 0L, 65535L)));
      }
      const std::string color_rel = "color/" + v.view_id + ".png";
      const std::string depth_rel = "depth/" + v.view_id + ".png";
      write_file_atomic((scene_dir / color_rel).string(),
                        std::string(v.color_png.begin(), v.color_png.end()));
      const auto depth_png = encode_png_gray16(depth);
      write_file_atomic((scene_dir / depth_rel).string(),
                        std::string(depth_png.begin(), depth_png.end()));
      manifest.views.push_back({v.view_id, color_rel, depth_rel, v.intrinsics, v.pose});
      views.push_back(std::move(v));
    }
    write_file_atomic((scene_dir / "manifest.json").string(),
                      scene_manifest_to_json(manifest).dump(2) + "\n");

    for (const auto& task : tasks) {
      if (task.scene != scene.id) continue;
      records.push_back({scene.id, task.description, box_points.at(task.gt_box)});
      const ChatRequest chat = build_prompt(task.description);
      fixtures.add(Endpoint::kChat, canonical_request(chat), to_json(ChatResponse{task.llm_reply}));

      const ParsedTask parsed = parse_response(task.llm_reply);
      for (const auto& v : views) {
        DetectSegmentResponse detected;
        for (std::size_t b = 0; b < scene.boxes.size(); ++b) {
          const auto affinity = scene.boxes[b].detect_as.find(parsed.contextual_object);
          if (affinity == scene.boxes[b].detect_as.end()) continue;
          const BinaryMask m = object_mask(v.color_render, static_cast<int>(b));
          if (m.area() < static_cast<std::size_t>(kMinDetectPixels)) continue;
          const double score =
              std::min(0.9, affinity->second + kTruncationBonus * borders_touched(m));
          detected.masks.push_back({rle_encode(m), score});
        }
        fixtures.add(Endpoint::kDetectSegment,
                     canonical_request(DetectSegmentRequest{v.color_png, parsed.contextual_object}),
                     to_json(detected));
        for (QueryMode mode : {QueryMode::kWithDescription, QueryMode::kObjectOnly}) {
          simulate_pointing(scene, task, v, mode, fixtures);
        }
      }
    }
  }
  write_file_atomic((fs::path(out_dir) / "tasks.json").string(),
                    task_records_to_json(records).dump() + "\n");
  const nlohmann::json config = {
      {"dataset_root", "."},
      {"cache_dir", "cache"},
      {"backend", {{"fixture_dir", "fixtures"}}},
      {"selection", {{"lambda_m", 0.5}, {"lambda_d", 0.25}, {"lambda_alpha", 0.25}, {"views", 50}}},
      {"segmentation", {{"query_mode", "with_description"}}},
      {"lifting", {{"radius", 0.02}}},
      {"tau", 0.7}};
  write_file_atomic((fs::path(out_dir) / "config.json").string(), config.dump(2) + "\n");
  const nlohmann::json grid = {
      {"lambda", {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, 0.5, 0.5}, {0.5, 0.25, 0.25}}},
      {"views", {2, 4, 8, 50}},
      {"tau", {0.3, 0.5, 0.7, 0.9}}};
  write_file_atomic((fs::path(out_dir) / "sweep.json").string(), grid.dump(2) + "\n");
  std::cout << fmt::format("wrote {} scenes, {} tasks, {} fixtures to {}\n", scenes.size(),
                           records.size(), fixtures.count(), out_dir);
  return 0;
}
