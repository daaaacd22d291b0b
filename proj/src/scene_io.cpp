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

#include "funcseg/scene_io.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "funcseg/digest.hpp"
#include "funcseg/error.hpp"

namespace funcseg {
namespace {

enum class ScalarType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

std::optional<ScalarType> scalar_type_from_name(const std::string& name) {
  if (name == "char" || name == "int8") return ScalarType::kInt8;
  if (name == "uchar" || name == "uint8") return ScalarType::kUint8;
  if (name == "short" || name == "int16") return ScalarType::kInt16;
  if (name == "ushort" || name == "uint16") return ScalarType::kUint16;
  if (name == "int" || name == "int32") return ScalarType::kInt32;
  if (name == "uint" || name == "uint32") return ScalarType::kUint32;
  if (name == "float" || name == "float32") return ScalarType::kFloat32;
  if (name == "double" || name == "float64") return ScalarType::kFloat64;
  return std::nullopt;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::kInt8:
    case ScalarType::kUint8:
      return 1;
    case ScalarType::kInt16:
    case ScalarType::kUint16:
      return 2;
    case ScalarType::kInt32:
    case ScalarType::kUint32:
    case ScalarType::kFloat32:
      return 4;
    case ScalarType::kFloat64:
      return 8;
  }
  return 0;
}

template <typename T>
T load_le(const std::uint8_t* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));  // host is little-endian
  return value;
}

double read_binary_scalar(ScalarType t, const std::uint8_t* p) {
  switch (t) {
    case ScalarType::kInt8:
      return load_le<std::int8_t>(p);
    case ScalarType::kUint8:
      return load_le<std::uint8_t>(p);
    case ScalarType::kInt16:
      return load_le<std::int16_t>(p);
    case ScalarType::kUint16:
      return load_le<std::uint16_t>(p);
    case ScalarType::kInt32:
      return load_le<std::int32_t>(p);
    case ScalarType::kUint32:
      return load_le<std::uint32_t>(p);
    case ScalarType::kFloat32:
      return load_le<float>(p);
    case ScalarType::kFloat64:
      return load_le<double>(p);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  ScalarType type;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
  bool has_list = false;
};

struct PlyHeader {
  PlyFormat format = PlyFormat::kAscii;
  std::vector<PlyElement> elements;
  std::size_t body_offset = 0;
};

PlyHeader parse_header(std::span<const std::uint8_t> bytes, const std::string& origin) {
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError(fmt::format("{}: malformed PLY header: {}", origin, why));
  };
  PlyHeader header;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string> {
    if (pos >= bytes.size()) return std::nullopt;
    std::size_t end = pos;
    while (end < bytes.size() && bytes[end] != '\n') ++end;
    std::string line(reinterpret_cast<const char*>(bytes.data()) + pos, end - pos);
    pos = end < bytes.size() ? end + 1 : end;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  auto first = next_line();
  if (!first || *first != "ply") throw fail("missing 'ply' magic");
  bool have_format = false;
  while (true) {
    auto line = next_line();
    if (!line) throw fail("missing end_header");
    std::istringstream in(*line);
    std::string keyword;
    in >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "end_header") break;
    if (keyword == "format") {
      std::string kind, version;
      in >> kind >> version;
      if (kind == "ascii") {
        header.format = PlyFormat::kAscii;
      } else if (kind == "binary_little_endian") {
        header.format = PlyFormat::kBinaryLittleEndian;
      } else {
        throw fail("unsupported format '" + kind + "'");
      }
      have_format = true;
    } else if (keyword == "element") {
      PlyElement element;
      long long count = -1;
      in >> element.name >> count;
      if (element.name.empty() || count < 0) throw fail("bad element line '" + *line + "'");
      element.count = static_cast<std::size_t>(count);
      header.elements.push_back(std::move(element));
    } else if (keyword == "property") {
      if (header.elements.empty()) throw fail("property before any element");
      std::string type_name;
      in >> type_name;
      if (type_name == "list") {
        header.elements.back().has_list = true;
        continue;
      }
      auto type = scalar_type_from_name(type_name);
      std::string name;
      in >> name;
      if (!type || name.empty()) throw fail("bad property line '" + *line + "'");
      header.elements.back().properties.push_back({name, *type});
    } else {
      throw fail("unknown keyword '" + keyword + "'");
    }
  }
  if (!have_format) throw fail("missing format line");
  header.body_offset = pos;
  return header;
}

}  // namespace

void PointCloud::validate() const {
  if (points.empty()) throw ValidationError("point cloud '" + scene_id + "' has no points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw ValidationError(fmt::format("point cloud '{}': vertex {} is not finite", scene_id, i));
    }
  }
  if (!colors.empty() && colors.size() != points.size()) {
    throw ValidationError("point cloud '" + scene_id + "': colour count differs from point count");
  }
}

PointCloud parse_point_cloud(std::span<const std::uint8_t> bytes, const std::string& origin) {
  const PlyHeader header = parse_header(bytes, origin);
  std::size_t vertex_slot = header.elements.size();
  for (std::size_t i = 0; i < header.elements.size(); ++i) {
    if (header.elements[i].name == "vertex") {
      vertex_slot = i;
      break;
    }
  }
  if (vertex_slot == header.elements.size()) {
    throw ParseError(origin + ": malformed PLY header: no vertex element");
  }
  for (std::size_t i = 0; i < vertex_slot; ++i) {
    if (header.elements[i].has_list) {
      throw ParseError(origin + ": list-valued element '" + header.elements[i].name +
                       "' before vertex data is not supported");
    }
  }
  const PlyElement& vertex = header.elements[vertex_slot];
  if (vertex.has_list) throw ParseError(origin + ": vertex element has list properties");
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
      if (vertex.properties[i].name == name) return i;
    }
    return std::nullopt;
  };
  const auto ix = find("x"), iy = find("y"), iz = find("z");
  if (!ix || !iy || !iz) {
    throw ParseError(origin + ": malformed PLY header: vertex lacks x/y/z properties");
  }
  const auto ir = find("red"), ig = find("green"), ib = find("blue");
  const bool with_color = ir && ig && ib;

  PointCloud cloud;
  cloud.scene_id = std::filesystem::path(origin).parent_path().filename().string();
  cloud.points.resize(vertex.count);
  if (with_color) cloud.colors.resize(vertex.count);
  std::vector<double> values(vertex.properties.size());

  auto store = [&](std::size_t i) {
    cloud.points[i] = {values[*ix], values[*iy], values[*iz]};
    const auto& p = cloud.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw ParseError(fmt::format("{}: vertex {} has a non-finite coordinate", origin, i));
    }
    if (with_color) {
      cloud.colors[i] = {static_cast<std::uint8_t>(values[*ir]),
                         static_cast<std::uint8_t>(values[*ig]),
                         static_cast<std::uint8_t>(values[*ib])};
    }
  };

  if (header.format == PlyFormat::kBinaryLittleEndian) {
    std::size_t offset = header.body_offset;
    for (std::size_t e = 0; e < vertex_slot; ++e) {
      std::size_t stride = 0;
      for (const auto& p : header.elements[e].properties) stride += scalar_size(p.type);
      offset += stride * header.elements[e].count;
    }
    std::size_t stride = 0;
    for (const auto& p : vertex.properties) stride += scalar_size(p.type);
    if (offset + stride * vertex.count > bytes.size()) {
      throw ParseError(fmt::format("{}: truncated binary PLY body ({} vertices declared)", origin,
                                   vertex.count));
    }
    for (std::size_t i = 0; i < vertex.count; ++i) {
      const std::uint8_t* row = bytes.data() + offset + i * stride;
      std::size_t field = 0;
      for (std::size_t k = 0; k < vertex.properties.size(); ++k) {
        values[k] = read_binary_scalar(vertex.properties[k].type, row + field);
        field += scalar_size(vertex.properties[k].type);
      }
      store(i);
    }
  } else {
    std::string_view body(reinterpret_cast<const char*>(bytes.data()) + header.body_offset,
                          bytes.size() - header.body_offset);
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string_view {
      while (pos < body.size() && std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
      const std::size_t start = pos;
      while (pos < body.size() && !std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
      return body.substr(start, pos - start);
    };
    auto skip_line = [&]() {
      while (pos < body.size() && body[pos] != '\n') ++pos;
      if (pos < body.size()) ++pos;
    };
    for (std::size_t e = 0; e < vertex_slot; ++e) {
      for (std::size_t i = 0; i < header.elements[e].count; ++i) skip_line();
    }
    for (std::size_t i = 0; i < vertex.count; ++i) {
      for (std::size_t k = 0; k < vertex.properties.size(); ++k) {
        const std::string_view token = next_token();
        if (token.empty()) {
          throw ParseError(fmt::format("{}: truncated ASCII PLY body at vertex {}", origin, i));
        }
        // strtod accepts "nan"/"inf" so the finiteness check can name the vertex.
        std::string owned(token);
        char* end = nullptr;
        values[k] = std::strtod(owned.c_str(), &end);
        if (end != owned.c_str() + owned.size()) {
          throw ParseError(
              fmt::format("{}: vertex {} has a malformed value '{}'", origin, i, owned));
        }
      }
      store(i);
    }
  }
  if (cloud.points.empty()) throw ParseError(origin + ": PLY has zero vertices");
  return cloud;
}

PointCloud load_point_cloud(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ParseError("point cloud file not found: " + path);
  const auto bytes = read_file_bytes(path);
  return parse_point_cloud(bytes, path);
}

std::string serialize_point_cloud(const PointCloud& cloud, PlyFormat format) {
  const bool with_color = !cloud.colors.empty();
  std::string out = "ply\n";
  out += format == PlyFormat::kAscii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  if (!cloud.scene_id.empty()) out += "comment scene " + cloud.scene_id + "\n";
  out += fmt::format("element vertex {}\n", cloud.points.size());
  out += "property double x\nproperty double y\nproperty double z\n";
  if (with_color) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "end_header\n";
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    if (format == PlyFormat::kAscii) {
      out += fmt::format("{:.17g} {:.17g} {:.17g}", p.x, p.y, p.z);
      if (with_color) {
        out += fmt::format(" {} {} {}", cloud.colors[i][0], cloud.colors[i][1], cloud.colors[i][2]);
      }
      out += '\n';
    } else {
      for (double v : {p.x, p.y, p.z}) {
        char buf[sizeof(double)];
        std::memcpy(buf, &v, sizeof(double));
        out.append(buf, sizeof(double));
      }
      if (with_color) out.append(reinterpret_cast<const char*>(cloud.colors[i].data()), 3);
    }
  }
  return out;
}

void save_point_cloud(const PointCloud& cloud, const std::string& path, PlyFormat format) {
  write_file_atomic(path, serialize_point_cloud(cloud, format));
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("intrinsics: focal lengths must be > 0");
  if (width <= 0 || height <= 0) throw ValidationError("intrinsics: image size must be > 0");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw ValidationError("intrinsics: principal point outside the image");
  }
  if (depth_downsample < 1) throw ValidationError("intrinsics: depth_downsample must be >= 1");
  if (width % depth_downsample != 0 || height % depth_downsample != 0) {
    throw ValidationError("intrinsics: image size is not divisible by depth_downsample");
  }
}

CameraIntrinsics CameraIntrinsics::at_depth_resolution() const {
  if (depth_downsample == 1) return *this;
  const double f = depth_downsample;
  return {fx / f,
          fy / f,
          (cx + 0.5) / f - 0.5,
          (cy + 0.5) / f - 0.5,
          width / depth_downsample,
          height / depth_downsample,
          1};
}

CameraPose CameraPose::from_matrix(std::span<const double> m) {
  if (m.size() != 16) throw ValidationError("pose: expected 16 values (row-major 4x4)");
  CameraPose pose;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) pose.rotation[r * 3 + c] = m[r * 4 + c];
    pose.translation[r] = m[r * 4 + 3];
  }
  if (std::abs(m[12]) > 1e-9 || std::abs(m[13]) > 1e-9 || std::abs(m[14]) > 1e-9 ||
      std::abs(m[15] - 1.0) > 1e-9) {
    throw ValidationError("pose: last row must be (0, 0, 0, 1)");
  }
  return pose;
}

std::array<double, 16> CameraPose::to_matrix() const {
  std::array<double, 16> m{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m[r * 4 + c] = rotation[r * 3 + c];
    m[r * 4 + 3] = translation[r];
  }
  m[15] = 1.0;
  return m;
}

void CameraPose::validate() const {
  constexpr double kTol = 1e-6;
  const auto& R = rotation;
  for (double v : R) {
    if (!std::isfinite(v)) throw ValidationError("pose: non-finite rotation");
  }
  for (double v : translation) {
    if (!std::isfinite(v)) throw ValidationError("pose: non-finite translation");
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += R[k * 3 + i] * R[k * 3 + j];
      if (std::abs(dot - (i == j ? 1.0 : 0.0)) > kTol) {
        throw ValidationError("pose: rotation is not orthonormal");
      }
    }
  }
  const double det = R[0] * (R[4] * R[8] - R[5] * R[7]) - R[1] * (R[3] * R[8] - R[5] * R[6]) +
                     R[2] * (R[3] * R[7] - R[4] * R[6]);
  if (std::abs(det - 1.0) > kTol) throw ValidationError("pose: rotation determinant is not +1");
}

Point3 CameraPose::to_world(const Point3& p) const {
  const auto& R = rotation;
  return {R[0] * p.x + R[1] * p.y + R[2] * p.z + translation[0],
          R[3] * p.x + R[4] * p.y + R[5] * p.z + translation[1],
          R[6] * p.x + R[7] * p.y + R[8] * p.z + translation[2]};
}

Point3 unproject(const CameraIntrinsics& K, const CameraPose& pose, int x, int y, double z) {
  const Point3 camera{(x - K.cx) / K.fx * z, (y - K.cy) / K.fy * z, z};
  return pose.to_world(camera);
}

View load_view(const std::string& view_id, const std::string& color_path,
               const std::string& depth_path, const CameraIntrinsics& intrinsics,
               const CameraPose& pose, double depth_scale) {
  intrinsics.validate();
  pose.validate();
  if (!(depth_scale > 0.0) || !std::isfinite(depth_scale)) {
    throw ValidationError("depth_scale must be a positive finite number");
  }
  View view;
  view.view_id = view_id;
  view.color_path = color_path;
  view.intrinsics = intrinsics;
  view.pose = pose;

  const auto color_bytes = read_file_bytes(color_path);
  view.color_size = png_size(color_bytes);
  if (view.color_size != intrinsics.image_size()) {
    throw ValidationError(fmt::format("view '{}': colour image is {}x{} but intrinsics declare {}x{}",
                                      view_id, view.color_size.width, view.color_size.height,
                                      intrinsics.width, intrinsics.height));
  }
  const Gray16Image raw = decode_png_gray16(read_file_bytes(depth_path));
  const ImageSize expected = intrinsics.depth_size();
  if (raw.size != expected) {
    throw ValidationError(fmt::format(
        "view '{}': depth map is {}x{} but intrinsics ({}x{}, depth_downsample {}) imply {}x{}",
        view_id, raw.size.width, raw.size.height, intrinsics.width, intrinsics.height,
        intrinsics.depth_downsample, expected.width, expected.height));
  }
  view.depth.size = raw.size;
  view.depth.meters.resize(raw.pixels.size());
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) {
    view.depth.meters[i] = raw.pixels[i] * depth_scale;
  }
  return view;
}

void TaskRecord::validate_against(const PointCloud& cloud) const {
  if (!gt_point_indices) return;
  for (std::uint32_t idx : *gt_point_indices) {
    if (idx >= cloud.size()) {
      throw ValidationError(fmt::format("task '{}': ground-truth index {} out of range ({} points)",
                                        description, idx, cloud.size()));
    }
  }
}

std::vector<TaskRecord> parse_task_records(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("task file: top level must be an array");
  std::vector<TaskRecord> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& r = j[i];
    if (!r.is_object()) throw ValidationError(fmt::format("task {}: not an object", i));
    TaskRecord task;
    if (!r.contains("scene_id") || !r["scene_id"].is_string()) {
      throw ValidationError(fmt::format("task {}: missing scene_id", i));
    }
    task.scene_id = r["scene_id"].get<std::string>();
    if (!r.contains("description") || !r["description"].is_string() ||
        r["description"].get<std::string>().empty()) {
      throw ValidationError(fmt::format("task {}: missing description", i));
    }
    task.description = r["description"].get<std::string>();
    if (r.contains("gt_point_indices") && !r["gt_point_indices"].is_null()) {
      const auto& gt = r["gt_point_indices"];
      if (!gt.is_array()) throw ValidationError(fmt::format("task {}: gt must be an array", i));
      std::vector<std::uint32_t> indices;
      std::unordered_set<std::uint32_t> seen;
      for (const auto& v : gt) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0 ||
            v.get<std::int64_t>() > std::numeric_limits<std::uint32_t>::max()) {
          throw ValidationError(fmt::format("task {}: gt indices must be non-negative integers", i));
        }
        const auto idx = v.get<std::uint32_t>();
        if (seen.insert(idx).second) indices.push_back(idx);
      }
      task.gt_point_indices = std::move(indices);
    }
    out.push_back(std::move(task));
  }
  return out;
}

std::vector<TaskRecord> load_task_file(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return parse_task_records(j);
}

nlohmann::json task_records_to_json(const std::vector<TaskRecord>& tasks) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : tasks) {
    nlohmann::json r = {{"scene_id", t.scene_id}, {"description", t.description}};
    if (t.gt_point_indices) r["gt_point_indices"] = *t.gt_point_indices;
    out.push_back(std::move(r));
  }
  return out;
}

SceneManifest parse_scene_manifest(const nlohmann::json& j) {
  try {
    SceneManifest m;
    m.scene_id = j.at("scene_id").get<std::string>();
    m.point_cloud = j.at("point_cloud").get<std::string>();
    m.depth_scale = j.value("depth_scale", kDefaultDepthScale);
    std::unordered_set<std::string> ids;
    for (const auto& v : j.at("views")) {
      ViewEntry e;
      e.view_id = v.at("view_id").get<std::string>();
      if (!ids.insert(e.view_id).second) {
        throw ValidationError("manifest: duplicate view_id '" + e.view_id + "'");
      }
      e.color = v.at("color").get<std::string>();
      e.depth = v.at("depth").get<std::string>();
      const auto& k = v.at("intrinsics");
      e.intrinsics = {k.at("fx").get<double>(),    k.at("fy").get<double>(),
                      k.at("cx").get<double>(),    k.at("cy").get<double>(),
                      k.at("width").get<int>(),    k.at("height").get<int>(),
                      k.value("depth_downsample", 1)};
      e.intrinsics.validate();
      const auto pose = v.at("pose").get<std::vector<double>>();
      e.pose = CameraPose::from_matrix(pose);
      e.pose.validate();
      m.views.push_back(std::move(e));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
}

nlohmann::json scene_manifest_to_json(const SceneManifest& m) {
  nlohmann::json views = nlohmann::json::array();
  for (const auto& v : m.views) {
    const auto& k = v.intrinsics;
    views.push_back({{"view_id", v.view_id},
                     {"color", v.color},
                     {"depth", v.depth},
                     {"intrinsics",
                      {{"fx", k.fx},
                       {"fy", k.fy},
                       {"cx", k.cx},
                       {"cy", k.cy},
                       {"width", k.width},
                       {"height", k.height},
                       {"depth_downsample", k.depth_downsample}}},
                     {"pose", v.pose.to_matrix()}});
  }
  return {{"scene_id", m.scene_id},
          {"point_cloud", m.point_cloud},
          {"depth_scale", m.depth_scale},
          {"views", views}};
}

Scene load_scene(const std::string& directory, std::optional<double> depth_scale_override) {
  namespace fs = std::filesystem;
  const fs::path dir(directory);
  const auto manifest_path = (dir / "manifest.json").string();
  const auto bytes = read_file_bytes(manifest_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(manifest_path + ": " + e.what());
  }
  Scene scene;
  scene.directory = directory;
  scene.manifest = parse_scene_manifest(j);
  scene.cloud = load_point_cloud((dir / scene.manifest.point_cloud).string());
  scene.cloud.scene_id = scene.manifest.scene_id;
  scene.cloud.validate();
  const double depth_scale = depth_scale_override.value_or(scene.manifest.depth_scale);
  scene.views.reserve(scene.manifest.views.size());
  for (const auto& e : scene.manifest.views) {
    scene.views.push_back(load_view(e.view_id, (dir / e.color).string(), (dir / e.depth).string(),
                                    e.intrinsics, e.pose, depth_scale));
  }
  return scene;
}

}  // namespace funcseg
