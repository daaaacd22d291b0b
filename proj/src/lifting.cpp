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

#include "funcseg/lifting.hpp"

#include <cmath>

#include <fmt/format.h>

#include "funcseg/error.hpp"
#include "funcseg/parallel.hpp"

namespace funcseg {

std::size_t SpatialHashGrid::CellHash::operator()(const CellKey& k) const noexcept {
  std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ULL;
  h ^= static_cast<std::uint64_t>(k.y) * 19349663ULL;
  h ^= static_cast<std::uint64_t>(k.z) * 83492791ULL;
  return static_cast<std::size_t>(h);
}

SpatialHashGrid::SpatialHashGrid(const PointCloud& cloud, double radius)
    : cloud_(cloud), radius_(radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ContractError("grid: radius must be > 0");
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    cells_[cell_of(cloud.points[i])].push_back(static_cast<std::uint32_t>(i));
  }
}

SpatialHashGrid::CellKey SpatialHashGrid::cell_of(const Point3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x / radius_)),
          static_cast<std::int64_t>(std::floor(p.y / radius_)),
          static_cast<std::int64_t>(std::floor(p.z / radius_))};
}

std::optional<std::uint32_t> SpatialHashGrid::nearest_within(const Point3& q) const {
  const CellKey c = cell_of(q);
  const double limit = radius_ * radius_;
  std::optional<std::uint32_t> best;
  double best_d2 = 0.0;
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        const auto it = cells_.find({c.x + dx, c.y + dy, c.z + dz});
        if (it == cells_.end()) continue;
        for (std::uint32_t idx : it->second) {
          const Point3& p = cloud_.points[idx];
          const double ex = p.x - q.x, ey = p.y - q.y, ez = p.z - q.z;
          const double d2 = ex * ex + ey * ey + ez * ez;
          if (d2 > limit) continue;
          if (!best || d2 < best_d2 || (d2 == best_d2 && idx < *best)) {
            best = idx;
            best_d2 = d2;
          }
        }
      }
    }
  }
  return best;
}

PixelToPointMap build_pixel_map(const View& view, const SpatialHashGrid& grid) {
  const CameraIntrinsics K = view.intrinsics.at_depth_resolution();
  PixelToPointMap map{view.view_id, view.depth.size, {}};
  map.index.assign(static_cast<std::size_t>(map.size.width) * map.size.height,
                   PixelToPointMap::kUnmapped);
  for (int y = 0; y < map.size.height; ++y) {
    for (int x = 0; x < map.size.width; ++x) {
      const double z = view.depth.at(x, y);
      if (!(z > 0.0) || !std::isfinite(z)) continue;
      if (const auto idx = grid.nearest_within(unproject(K, view.pose, x, y, z))) {
        map.index[static_cast<std::size_t>(y) * map.size.width + x] = *idx;
      }
    }
  }
  return map;
}

PixelToPointMap build_pixel_map(const View& view, const PointCloud& cloud, double radius) {
  return build_pixel_map(view, SpatialHashGrid(cloud, radius));
}

Heatmap3D Heatmap3D::from_counts(std::map<std::uint32_t, std::uint64_t> raw) {
  Heatmap3D h;
  std::erase_if(raw, [](const auto& kv) { return kv.second == 0; });
  h.raw = std::move(raw);
  std::uint64_t max_count = 0;
  for (const auto& [idx, count] : h.raw) max_count = std::max(max_count, count);
  for (const auto& [idx, count] : h.raw) {
    h.normalized[idx] = static_cast<double>(count) / static_cast<double>(max_count);
  }
  return h;
}

Heatmap3D accumulate(std::span<const FunctionalMask2D> masks,
                     std::span<const PixelToPointMap> maps, int jobs) {
  std::map<std::string, const PixelToPointMap*> by_view;
  for (const auto& m : maps) by_view[m.view_id] = &m;
  std::vector<const PixelToPointMap*> paired(masks.size());
  for (std::size_t k = 0; k < masks.size(); ++k) {
    const auto it = by_view.find(masks[k].view_id);
    if (it == by_view.end()) {
      throw ContractError("accumulate: no pixel map for view '" + masks[k].view_id + "'");
    }
    if (it->second->size != masks[k].mask.size()) {
      throw ContractError("accumulate: mask and pixel map sizes differ for view '" +
                          masks[k].view_id + "'");
    }
    paired[k] = it->second;
  }

  std::vector<std::map<std::uint32_t, std::uint64_t>> partial(masks.size());
  parallel_for(masks.size(), jobs, [&](std::size_t k) {
    const BinaryMask& mask = masks[k].mask;
    for (int y = 0; y < mask.height(); ++y) {
      for (int x = 0; x < mask.width(); ++x) {
        if (!mask.at(x, y)) continue;
        if (const auto idx = paired[k]->at(x, y)) ++partial[k][*idx];
      }
    }
  });

  std::map<std::uint32_t, std::uint64_t> total;
  for (const auto& counts : partial) {
    for (const auto& [idx, c] : counts) total[idx] += c;
  }
  return Heatmap3D::from_counts(std::move(total));
}

Mask3D threshold(const Heatmap3D& heatmap, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ContractError("threshold: tau must lie in [0, 1]");
  Mask3D mask{{}, tau};
  for (const auto& [idx, s] : heatmap.normalized) {
    if (s > tau) mask.point_indices.push_back(idx);
  }
  return mask;
}

nlohmann::json to_json(const Heatmap3D& heatmap) {
  nlohmann::json raw = nlohmann::json::array();
  for (const auto& [idx, c] : heatmap.raw) raw.push_back({idx, c});
  return {{"raw_counts", raw}};
}

Heatmap3D heatmap_from_json(const nlohmann::json& j) {
  std::map<std::uint32_t, std::uint64_t> raw;
  for (const auto& e : j.at("raw_counts")) raw[e.at(0).get<std::uint32_t>()] = e.at(1).get<std::uint64_t>();
  return Heatmap3D::from_counts(std::move(raw));
}

nlohmann::json to_json(const Mask3D& mask) {
  return {{"tau", mask.tau}, {"point_indices", mask.point_indices}};
}

Mask3D mask3d_from_json(const nlohmann::json& j) {
  return {j.at("point_indices").get<std::vector<std::uint32_t>>(), j.at("tau").get<double>()};
}

PointCloud heatmap_cloud(const PointCloud& cloud, const Heatmap3D& heatmap) {
  PointCloud out;
  out.scene_id = cloud.scene_id;
  out.points = cloud.points;
  out.colors.assign(cloud.points.size(), Rgb{64, 64, 64});
  for (const auto& [idx, s] : heatmap.normalized) {
    if (idx < out.colors.size()) {
      out.colors[idx] = {static_cast<std::uint8_t>(std::lround(64 + 191 * s)), 0, 0};
    }
  }
  return out;
}

}  // namespace funcseg
