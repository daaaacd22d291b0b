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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "funcseg/png_io.hpp"

namespace funcseg {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  bool operator==(const Point3&) const = default;
};

using Rgb = std::array<std::uint8_t, 3>;

/// Scene geometry. Point indices are the identity used by ground-truth masks
/// and must follow file order.
struct PointCloud {
  std::string scene_id;
  std::vector<Point3> points;
  /// Optional per-point colour, passed through untouched.
  std::vector<Rgb> colors;

  std::size_t size() const { return points.size(); }
  /// Throws ValidationError on an empty cloud, non-finite coordinates or a
  /// colour array of the wrong length.
  void validate() const;
};

enum class PlyFormat { kAscii, kBinaryLittleEndian };

/// Reads the vertex element of an ASCII or binary-little-endian PLY file.
/// Requires float/double (or integer) x, y and z properties; red/green/blue
/// are kept when present.
PointCloud load_point_cloud(const std::string& path);
PointCloud parse_point_cloud(std::span<const std::uint8_t> bytes, const std::string& origin);
/// Coordinates are written as doubles, so binary output round-trips exactly.
std::string serialize_point_cloud(const PointCloud& cloud, PlyFormat format);
void save_point_cloud(const PointCloud& cloud, const std::string& path, PlyFormat format);

/// Pinhole intrinsics of the colour image. Depth maps may be stored at a
/// lower resolution; `depth_downsample` is the integer colour-to-depth
/// factor.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  int depth_downsample = 1;

  void validate() const;
  ImageSize image_size() const { return {width, height}; }
  ImageSize depth_size() const { return {width / depth_downsample, height / depth_downsample}; }
  /// Intrinsics expressed at depth resolution (pixel centres at integer
  /// coordinates in both frames).
  CameraIntrinsics at_depth_resolution() const;
};

/// Camera-to-world rigid transform.
struct CameraPose {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  std::array<double, 3> translation{0, 0, 0};

  /// Row-major 4x4 camera-to-world matrix; last row must be (0, 0, 0, 1).
  static CameraPose from_matrix(std::span<const double> rowmajor4x4);
  std::array<double, 16> to_matrix() const;
  /// Orthonormality and det = +1 within 1e-6.
  void validate() const;
  Point3 to_world(const Point3& camera_point) const;
};

/// Back-projects depth pixel (x, y) at metric depth z into world space.
/// `depth_intrinsics` must already be at depth resolution.
Point3 unproject(const CameraIntrinsics& depth_intrinsics, const CameraPose& pose, int x, int y,
                 double z);

struct DepthMap {
  ImageSize size;
  std::vector<double> meters;  // row-major, 0 marks an invalid pixel
  double at(int x, int y) const { return meters[static_cast<std::size_t>(y) * size.width + x]; }
};

struct View {
  std::string view_id;
  std::string color_path;
  ImageSize color_size;
  DepthMap depth;
  CameraIntrinsics intrinsics;
  CameraPose pose;
};

inline constexpr double kDefaultDepthScale = 0.001;

/// Loads one posed RGBD frame. Depth must be a 16-bit single-channel PNG
/// whose size equals intrinsics.depth_size(); raw values are multiplied by
/// depth_scale to obtain metres.
View load_view(const std::string& view_id, const std::string& color_path,
               const std::string& depth_path, const CameraIntrinsics& intrinsics,
               const CameraPose& pose, double depth_scale = kDefaultDepthScale);

struct TaskRecord {
  std::string scene_id;
  std::string description;
  std::optional<std::vector<std::uint32_t>> gt_point_indices;

  /// Checks every ground-truth index against the scene's point count.
  void validate_against(const PointCloud& cloud) const;
};

std::vector<TaskRecord> parse_task_records(const nlohmann::json& j);
std::vector<TaskRecord> load_task_file(const std::string& path);
nlohmann::json task_records_to_json(const std::vector<TaskRecord>& tasks);

struct ViewEntry {
  std::string view_id;
  std::string color;  // relative to the manifest's directory
  std::string depth;
  CameraIntrinsics intrinsics;
  CameraPose pose;
};

struct SceneManifest {
  std::string scene_id;
  std::string point_cloud;
  double depth_scale = kDefaultDepthScale;
  std::vector<ViewEntry> views;
};

SceneManifest parse_scene_manifest(const nlohmann::json& j);
nlohmann::json scene_manifest_to_json(const SceneManifest& manifest);

/// A fully loaded scene: cloud plus all posed views.
struct Scene {
  std::string directory;
  SceneManifest manifest;
  PointCloud cloud;
  std::vector<View> views;
};

/// Loads <directory>/manifest.json and everything it references.
/// `depth_scale_override` replaces the manifest's depth scale when set.
Scene load_scene(const std::string& directory,
                 std::optional<double> depth_scale_override = std::nullopt);

}  // namespace funcseg
