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

#include "funcseg/functional_seg.hpp"

#include <fmt/format.h>

#include "funcseg/digest.hpp"
#include "funcseg/error.hpp"

namespace funcseg {

std::string_view to_string(QueryMode mode) {
  return mode == QueryMode::kWithDescription ? "with_description" : "object_only";
}

QueryMode query_mode_from_string(std::string_view text) {
  if (text == "with_description") return QueryMode::kWithDescription;
  if (text == "object_only") return QueryMode::kObjectOnly;
  throw ConfigError("unknown query mode '" + std::string(text) + "'");
}

std::string build_point_query(std::string_view functional_object, std::string_view description,
                              QueryMode mode) {
  if (functional_object.empty()) throw ContractError("point query: empty functional object");
  if (mode == QueryMode::kObjectOnly) return fmt::format("Point to all the {}.", functional_object);
  if (description.empty()) throw ContractError("point query: empty description");
  return fmt::format("Point to all the {} in order to {}", functional_object, description);
}

nlohmann::json to_json(const FunctionalMask2D& m) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : m.source_points) points.push_back({p.x, p.y});
  return {{"view_id", m.view_id}, {"mask", rle_to_json(rle_encode(m.mask))}, {"source_points", points}};
}

FunctionalMask2D functional_mask_from_json(const nlohmann::json& j) {
  FunctionalMask2D m{j.at("view_id").get<std::string>(), rle_decode(rle_from_json(j.at("mask"))), {}};
  for (const auto& p : j.at("source_points")) {
    m.source_points.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
  }
  return m;
}

std::optional<FunctionalMask2D> segment_functional(const View& view, std::string_view query,
                                                   ModelBackend& backend) {
  const auto image = read_file_bytes(view.color_path);
  const PointResponse pointed = backend.point({image, std::string(query)});
  if (pointed.points.empty()) return std::nullopt;

  SegmentPointsRequest request{image, {}};
  for (const auto& p : pointed.points) request.points.push_back(denormalize(p, view.color_size));
  const SegmentPointsResponse segmented = backend.segment_points(request);

  FunctionalMask2D out;
  out.view_id = view.view_id;
  out.source_points = std::move(request.points);
  out.mask = resample_nearest(rle_decode(segmented.mask), view.depth.size);
  if (out.mask.size() != view.depth.size) {
    throw ValidationError(fmt::format("view '{}': functional mask does not match depth size",
                                      view.view_id));
  }
  return out;
}

}  // namespace funcseg
