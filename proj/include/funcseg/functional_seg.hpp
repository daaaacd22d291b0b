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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "funcseg/mask.hpp"
#include "funcseg/model_backends.hpp"
#include "funcseg/scene_io.hpp"

namespace funcseg {

enum class QueryMode {
  kWithDescription,  // "Point to all the {F} in order to {D}"
  kObjectOnly,       // "Point to all the {F}."
};

std::string_view to_string(QueryMode mode);
QueryMode query_mode_from_string(std::string_view text);

std::string build_point_query(std::string_view functional_object, std::string_view description,
                              QueryMode mode = QueryMode::kWithDescription);

/// A functional-object mask for one view, at depth resolution.
struct FunctionalMask2D {
  std::string view_id;
  BinaryMask mask;
  std::vector<PixelCoord> source_points;  // prompts, in colour-image pixels
};

nlohmann::json to_json(const FunctionalMask2D& mask);
FunctionalMask2D functional_mask_from_json(const nlohmann::json& j);

/// Points at the functional object, prompts the segmentor with all returned
/// points at once, and resamples the mask to depth resolution. Returns
/// nullopt when the pointing model finds nothing.
std::optional<FunctionalMask2D> segment_functional(const View& view, std::string_view query,
                                                   ModelBackend& backend);

}  // namespace funcseg
