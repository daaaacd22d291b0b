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

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "funcseg/digest.hpp"
#include "funcseg/error.hpp"
#include "funcseg/png_io.hpp"
#include "funcseg/scene_io.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

namespace funcseg {
namespace {

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, bool colors) {
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_int_distribution<int> c(0, 255);
  PointCloud cloud;
  cloud.scene_id = "fuzz";
  for (std::size_t i = 0; i < n; ++i) {
    cloud.points.push_back({u(rng), u(rng), u(rng)});
    if (colors) {
      cloud.colors.push_back({static_cast<std::uint8_t>(c(rng)), static_cast<std::uint8_t>(c(rng)),
                              static_cast<std::uint8_t>(c(rng))});
    }
  }
  return cloud;
}

TEST(Ply, BinaryRoundTripIsExact) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 10000;
    const PointCloud cloud = random_cloud(rng, n, trial % 2 == 0);
    const auto bytes = serialize_point_cloud(cloud, PlyFormat::kBinaryLittleEndian);
    const PointCloud back = parse_point_cloud(as_bytes(bytes), "mem");
    ASSERT_EQ(back.points, cloud.points);
    ASSERT_EQ(back.colors, cloud.colors);
  }
}

TEST(Ply, AsciiRoundTripKeepsOrderAndPrecision) {
  std::mt19937_64 rng(8);
  const PointCloud cloud = random_cloud(rng, 2000, true);
  const auto text = serialize_point_cloud(cloud, PlyFormat::kAscii);
  const PointCloud back = parse_point_cloud(as_bytes(text), "mem");
  ASSERT_EQ(back.size(), cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    EXPECT_DOUBLE_EQ(back.points[i].x, cloud.points[i].x);
    EXPECT_DOUBLE_EQ(back.points[i].y, cloud.points[i].y);
    EXPECT_DOUBLE_EQ(back.points[i].z, cloud.points[i].z);
  }
  EXPECT_EQ(back.colors, cloud.colors);
}

TEST(Ply, ReadsFloatVerticesWithExtraElements) {
  const std::string text =
      "ply\nformat ascii 1.0\ncomment hand written\nelement vertex 2\n"
      "property float x\nproperty float y\nproperty float z\nproperty float nx\n"
      "element face 0\nproperty list uchar int vertex_indices\nend_header\n"
      "0.5 1 2 9\n-1 0 3.25 9\n";
  const PointCloud cloud = parse_point_cloud(as_bytes(text), "mem");
  ASSERT_EQ(cloud.size(), 2u);
  EXPECT_EQ(cloud.points[0], (Point3{0.5, 1, 2}));
  EXPECT_EQ(cloud.points[1], (Point3{-1, 0, 3.25}));
  EXPECT_TRUE(cloud.colors.empty());
}

TEST(Ply, MalformedInputIsRejected) {
  const std::string header =
      "ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nproperty double y\n"
      "property double z\nend_header\n";
  EXPECT_THROW(parse_point_cloud(as_bytes(header + "0 0 0\n"), "mem"), ParseError);
  EXPECT_THROW(parse_point_cloud(as_bytes(header + "0 0 0\nnan 0 0\n"), "mem"), ParseError);
  EXPECT_THROW(parse_point_cloud(as_bytes(std::string("plx\n")), "mem"), ParseError);
  EXPECT_THROW(parse_point_cloud(as_bytes(std::string("ply\nformat ascii 1.0\n")), "mem"),
               ParseError);
  const std::string no_z =
      "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty double y\n"
      "end_header\n0 0\n";
  EXPECT_THROW(parse_point_cloud(as_bytes(no_z), "mem"), ParseError);

  std::mt19937_64 rng(9);
  const auto bin = serialize_point_cloud(random_cloud(rng, 10, false), PlyFormat::kBinaryLittleEndian);
  EXPECT_THROW(parse_point_cloud(as_bytes(bin.substr(0, bin.size() - 3)), "mem"), ParseError);
  EXPECT_THROW(load_point_cloud("/nonexistent/cloud.ply"), ParseError);
}

TEST(Intrinsics, DepthResolutionKeepsPixelCentresAligned) {
  const CameraIntrinsics k{450, 440, 255.5, 191.5, 512, 384, 2};
  k.validate();
  const CameraIntrinsics d = k.at_depth_resolution();
  EXPECT_DOUBLE_EQ(d.fx, 225);
  EXPECT_DOUBLE_EQ(d.fy, 220);
  EXPECT_DOUBLE_EQ(d.cx, 127.5);
  EXPECT_DOUBLE_EQ(d.cy, 95.5);
  EXPECT_EQ(d.image_size(), (ImageSize{256, 192}));
  EXPECT_EQ(k.depth_size(), (ImageSize{256, 192}));
  // A ray through colour pixel (x, y) passes through depth pixel ((x+0.5)/f - 0.5, ...).
  const double xc = 300.0;
  const double xd = (xc + 0.5) / 2 - 0.5;
  EXPECT_NEAR((xc - k.cx) / k.fx, (xd - d.cx) / d.fx, 1e-12);
}

TEST(Intrinsics, Validation) {
  EXPECT_THROW((CameraIntrinsics{0, 1, 1, 1, 4, 4, 1}.validate()), ValidationError);
  EXPECT_THROW((CameraIntrinsics{1, 1, 5, 1, 4, 4, 1}.validate()), ValidationError);
  EXPECT_THROW((CameraIntrinsics{1, 1, 1, 1, 0, 4, 1}.validate()), ValidationError);
  EXPECT_THROW((CameraIntrinsics{1, 1, 1, 1, 5, 4, 2}.validate()), ValidationError);
  EXPECT_THROW((CameraIntrinsics{1, 1, 1, 1, 4, 4, 0}.validate()), ValidationError);
  EXPECT_NO_THROW((CameraIntrinsics{1, 1, 1, 1, 4, 4, 2}.validate()));
}

TEST(Pose, MatrixRoundTripAndValidation) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const CameraPose p = oracle::random_pose(rng);
    EXPECT_NO_THROW(p.validate());
    const auto m = p.to_matrix();
    const CameraPose q = CameraPose::from_matrix(m);
    EXPECT_EQ(q.rotation, p.rotation);
    EXPECT_EQ(q.translation, p.translation);
  }
  std::array<double, 16> bad_row{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 1, 1};
  EXPECT_THROW(CameraPose::from_matrix(bad_row), ValidationError);
  std::array<double, 12> short_m{};
  EXPECT_THROW(CameraPose::from_matrix(short_m), ValidationError);
  CameraPose scaled;
  scaled.rotation = {2, 0, 0, 0, 1, 0, 0, 0, 1};
  EXPECT_THROW(scaled.validate(), ValidationError);
  CameraPose mirrored;
  mirrored.rotation = {-1, 0, 0, 0, 1, 0, 0, 0, 1};
  EXPECT_THROW(mirrored.validate(), ValidationError);
}

TEST(Unproject, HandExample) {
  const CameraIntrinsics k{100, 50, 10, 20, 21, 41, 1};
  CameraPose pose;
  // 90 degrees about z, then shift.
  pose.rotation = {0, -1, 0, 1, 0, 0, 0, 0, 1};
  pose.translation = {1, 2, 3};
  // camera point: ((30-10)/100*2, (25-20)/50*2, 2) = (0.4, 0.2, 2)
  const Point3 w = unproject(k, pose, 30, 25, 2.0);
  EXPECT_NEAR(w.x, -0.2 + 1, 1e-12);
  EXPECT_NEAR(w.y, 0.4 + 2, 1e-12);
  EXPECT_NEAR(w.z, 2 + 3, 1e-12);
}

TEST(Unproject, MatchesOracle) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const oracle::FuzzScene s = oracle::random_scene(rng, 10, 3, 32);
    for (const View& v : s.views) {
      const auto d = v.intrinsics.at_depth_resolution();
      for (int y = 0; y < v.depth.size.height; y += 3) {
        for (int x = 0; x < v.depth.size.width; x += 3) {
          const double z = v.depth.at(x, y);
          if (z <= 0) continue;
          const Point3 a = unproject(d, v.pose, x, y, z);
          const Point3 b = oracle::backproject(v, x, y);
          EXPECT_NEAR(a.x, b.x, 1e-9);
          EXPECT_NEAR(a.y, b.y, 1e-9);
          EXPECT_NEAR(a.z, b.z, 1e-9);
        }
      }
    }
  }
}

TEST(Tasks, ParseValidateAndRoundTrip) {
  const auto j = nlohmann::json::parse(R"([
    {"scene_id": "a", "description": "open it", "gt_point_indices": [3, 1, 3]},
    {"scene_id": "b", "description": "turn it on"},
    {"scene_id": "c", "description": "x", "gt_point_indices": null}
  ])");
  const auto tasks = parse_task_records(j);
  ASSERT_EQ(tasks.size(), 3u);
  EXPECT_EQ(*tasks[0].gt_point_indices, (std::vector<std::uint32_t>{3, 1}));
  EXPECT_FALSE(tasks[1].gt_point_indices.has_value());
  EXPECT_FALSE(tasks[2].gt_point_indices.has_value());
  EXPECT_EQ(parse_task_records(task_records_to_json(tasks)).size(), 3u);

  PointCloud cloud;
  cloud.points.resize(3);
  EXPECT_THROW(tasks[0].validate_against(cloud), ValidationError);
  cloud.points.resize(4);
  EXPECT_NO_THROW(tasks[0].validate_against(cloud));

  for (const char* bad : {R"({"scene_id":"a"})", R"([{"description":"x"}])",
                          R"([{"scene_id":"a","description":""}])",
                          R"([{"scene_id":"a","description":"x","gt_point_indices":[-1]}])",
                          R"([{"scene_id":"a","description":"x","gt_point_indices":[0.5]}])",
                          R"([{"scene_id":"a","description":"x","gt_point_indices":3}])"}) {
    EXPECT_THROW(parse_task_records(nlohmann::json::parse(bad)), ValidationError) << bad;
  }
}

SceneManifest tiny_manifest() {
  SceneManifest m;
  m.scene_id = "tiny";
  m.point_cloud = "cloud.ply";
  m.depth_scale = 0.001;
  ViewEntry e;
  e.view_id = "v0";
  e.color = "v0.png";
  e.depth = "v0_depth.png";
  e.intrinsics = {8, 8, 3.5, 1.5, 8, 4, 2};
  m.views.push_back(e);
  return m;
}

TEST(Manifest, RoundTripAndDuplicates) {
  const SceneManifest m = tiny_manifest();
  const auto j = scene_manifest_to_json(m);
  const SceneManifest back = parse_scene_manifest(j);
  EXPECT_EQ(scene_manifest_to_json(back), j);
  auto dup = j;
  dup["views"].push_back(dup["views"][0]);
  EXPECT_THROW(parse_scene_manifest(dup), ValidationError);
  auto missing = j;
  missing.erase("point_cloud");
  EXPECT_THROW(parse_scene_manifest(missing), ValidationError);
}

void write_png(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

TEST(Scene, LoadsAndChecksDepthSize) {
  testing::TempDir dir;
  const SceneManifest m = tiny_manifest();
  write_file_atomic(dir.str("manifest.json"), scene_manifest_to_json(m).dump());
  PointCloud cloud;
  cloud.points = {{0, 0, 1}, {1, 0, 1}};
  save_point_cloud(cloud, dir.str("cloud.ply"), PlyFormat::kBinaryLittleEndian);
  write_png(dir.str("v0.png"), encode_png_rgb8({{8, 4}, std::vector<std::uint8_t>(8 * 4 * 3, 0)}));
  Gray16Image depth{{4, 2}, {1000, 2000, 0, 65535, 1, 2, 3, 4}};
  write_png(dir.str("v0_depth.png"), encode_png_gray16(depth));

  const Scene scene = load_scene(dir.str());
  ASSERT_EQ(scene.views.size(), 1u);
  EXPECT_DOUBLE_EQ(scene.views[0].depth.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(scene.views[0].depth.at(1, 0), 2.0);
  EXPECT_DOUBLE_EQ(scene.views[0].depth.at(2, 0), 0.0);
  EXPECT_EQ(scene.cloud.size(), 2u);
  EXPECT_DOUBLE_EQ(load_scene(dir.str(), 0.0001).views[0].depth.at(0, 0), 0.1);

  // Depth stored at colour resolution contradicts depth_downsample = 2.
  write_png(dir.str("v0_depth.png"), encode_png_gray16({{8, 4}, std::vector<std::uint16_t>(32, 1)}));
  EXPECT_THROW(load_scene(dir.str()), ValidationError);
  write_png(dir.str("v0_depth.png"), encode_png_gray16(depth));
  write_png(dir.str("v0.png"), encode_png_rgb8({{6, 4}, std::vector<std::uint8_t>(6 * 4 * 3, 0)}));
  EXPECT_THROW(load_scene(dir.str()), ValidationError);
}

}  // namespace
}  // namespace funcseg
