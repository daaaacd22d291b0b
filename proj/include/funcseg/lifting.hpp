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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "funcseg/functional_seg.hpp"
#include "funcseg/scene_io.hpp"

namespace funcseg {

inline constexpr double kDefaultLiftRadius = 0.02;

/// Uniform hash grid over a point cloud for radius-bounded nearest-neighbour
/// queries. Cells have side `radius`, so a query inspects 27 cells.
class SpatialHashGrid {
 public:
  SpatialHashGrid(const PointCloud& cloud, double radius);

  /// Nearest point with squared distance <= radius^2; ties go to the lowest
  /// index.
  std::optional<std::uint32_t> nearest_within(const Point3& query) const;
  double radius() const { return radius_; }

 private:
  struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey&) const = default;
  };
  struct CellHash {
    std::size_t operator()(const CellKey& k) const noexcept;
  };
  CellKey cell_of(const Point3& p) const;

  const PointCloud& cloud_;
  double radius_;
  std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> cells_;
};

/// Pixel-to-point correspondence of one view at depth resolution.
struct PixelToPointMap {
  static constexpr std::int64_t kUnmapped = -1;

  std::string view_id;
  ImageSize size;
  std::vector<std::int64_t> index;  // row-major, kUnmapped where no point

  std::optional<std::uint32_t> at(int x, int y) const {
    const auto v = index[static_cast<std::size_t>(y) * size.width + x];
    if (v == kUnmapped) return std::nullopt;
    return static_cast<std::uint32_t>(v);
  }
};

/// Back-projects every valid depth pixel and maps it to the nearest cloud
/// point within the grid's radius.
PixelToPointMap build_pixel_map(const View& view, const SpatialHashGrid& grid);
PixelToPointMap build_pixel_map(const View& view, const PointCloud& cloud,
                                double radius = kDefaultLiftRadius);

/// Per-point agreement counts and their max-normalized values.
struct Heatmap3D {
  std::map<std::uint32_t, std::uint64_t> raw;
  std::map<std::uint32_t, double> normalized;

  static Heatmap3D from_counts(std::map<std::uint32_t, std::uint64_t> raw);
  bool operator==(const Heatmap3D&) const = default;
};

/// Sums, over all views, the mask pixels that map to each point. Masks and
/// maps are paired by view_id; views are spread over `jobs` workers.
Heatmap3D accumulate(std::span<const FunctionalMask2D> masks,
                     std::span<const PixelToPointMap> maps, int jobs = 1);

struct Mask3D {
  std::vector<std::uint32_t> point_indices;  // sorted
  double tau = 0.0;
  bool operator==(const Mask3D&) const = default;
};

/// Points whose normalized score is strictly greater than tau.
Mask3D threshold(const Heatmap3D& heatmap, double tau);

nlohmann::json to_json(const Heatmap3D& heatmap);
Heatmap3D heatmap_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Mask3D& mask);
Mask3D mask3d_from_json(const nlohmann::json& j);

/// Copy of the cloud coloured by heat (red channel), grey elsewhere.
PointCloud heatmap_cloud(const PointCloud& cloud, const Heatmap3D& heatmap);

}  // namespace funcseg
