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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "funcseg/mask.hpp"
#include "funcseg/model_backends.hpp"

namespace funcseg {

/// One detection of the contextual object in a view.
struct ContextMask {
  std::string view_id;
  std::vector<PixelCoord> pixels;  // non-empty, inside the image
  double confidence = 0.0;         // detector score in [0, 1]
};

struct VisibilityScore {
  double confidence = 0.0;    // S_m
  double distance = 0.0;      // S_d
  double angle = 0.0;         // S_alpha
  double total = 0.0;         // weighted sum
};

struct ScoredView {
  std::string view_id;
  double score = 0.0;  // max over all_scores[i].total, 0 when nothing detected
  std::optional<std::size_t> best_mask;  // index into all_scores
  std::vector<VisibilityScore> all_scores;
};

struct SelectionConfig {
  double lambda_m = 0.5;
  double lambda_d = 0.25;
  double lambda_alpha = 0.25;
  int max_views = 50;
  int bins_d = 16;
  int bins_alpha = 16;

  /// Throws ConfigError unless the weights are non-negative and sum to 1
  /// within 1e-9 and the counts are positive.
  void validate() const;
};

/// Distance from the image centre and polar angle of one pixel, after
/// normalizing both axes to [-1, 1].
struct PolarCoord {
  double d = 0.0;      // in [0, sqrt(2)]
  double alpha = 0.0;  // in [-pi, pi)
};

std::vector<PolarCoord> polar_coordinates(std::span<const PixelCoord> pixels, ImageSize image);

struct DistributionScores {
  double distance = 0.0;
  double angle = 0.0;
};

/// Additive smoothing applied to every histogram bin.
inline constexpr double kHistogramSmoothing = 1e-6;

/// Similarity of the distance and angle histograms to uniform:
/// 1 - KL(P || U) / ln(B), clamped to [0, 1]. Distances are binned over
/// [0, max d of the mask]; angles over [-pi, pi).
DistributionScores distribution_scores(std::span<const PolarCoord> coords, int bins_d,
                                       int bins_alpha);

double combine_scores(double s_m, double s_d, double s_alpha, const SelectionConfig& config);

VisibilityScore score_mask(const ContextMask& mask, ImageSize image, const SelectionConfig& config);

/// Scores every detection and keeps the best (first on ties).
ScoredView score_view(const std::string& view_id, std::span<const ContextMask> masks,
                      ImageSize image, const SelectionConfig& config);

/// Highest scores first, ties by view_id; zero-score views are never taken.
std::vector<ScoredView> select_views(std::vector<ScoredView> scored, int max_views);

/// Converts detector output into context masks, dropping empty masks.
std::vector<ContextMask> context_masks_from_detections(const std::string& view_id,
                                                       const DetectSegmentResponse& response);

nlohmann::json to_json(const ContextMask& mask);
ContextMask context_mask_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScoredView& view);
ScoredView scored_view_from_json(const nlohmann::json& j);

}  // namespace funcseg
