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

#include "funcseg/view_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "funcseg/error.hpp"

namespace funcseg {
namespace {

/// Normalized histogram with additive smoothing.
double uniformity_score(const std::vector<double>& counts) {
  const std::size_t bins = counts.size();
  if (bins <= 1) return 1.0;
  double total = 0.0;
  for (double c : counts) total += c + kHistogramSmoothing;
  double kl = 0.0;
  for (double c : counts) {
    const double p = (c + kHistogramSmoothing) / total;
    kl += p * std::log(p * static_cast<double>(bins));
  }
  return std::clamp(1.0 - kl / std::log(static_cast<double>(bins)), 0.0, 1.0);
}

}  // namespace

void SelectionConfig::validate() const {
  for (double l : {lambda_m, lambda_d, lambda_alpha}) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("selection: weights must be >= 0");
  }
  const double sum = lambda_m + lambda_d + lambda_alpha;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError(fmt::format("selection: weights sum to {}, expected 1", sum));
  }
  if (max_views < 1) throw ConfigError("selection: view budget must be >= 1");
  if (bins_d < 1 || bins_alpha < 1) throw ConfigError("selection: bin counts must be >= 1");
}

std::vector<PolarCoord> polar_coordinates(std::span<const PixelCoord> pixels, ImageSize image) {
  if (pixels.empty()) throw ContractError("polar_coordinates: empty mask");
  const double half_w = image.width / 2.0;
  const double half_h = image.height / 2.0;
  std::vector<PolarCoord> out;
  out.reserve(pixels.size());
  for (const auto& p : pixels) {
    const double u = (p.x - half_w) / half_w;
    const double v = (p.y - half_h) / half_h;
    double alpha = std::atan2(v, u);
    if (alpha >= std::numbers::pi) alpha -= 2.0 * std::numbers::pi;
    out.push_back({std::sqrt(u * u + v * v), alpha});
  }
  return out;
}

DistributionScores distribution_scores(std::span<const PolarCoord> coords, int bins_d,
                                       int bins_alpha) {
  if (coords.empty()) throw ContractError("distribution_scores: empty input");
  if (bins_d < 1 || bins_alpha < 1) throw ContractError("distribution_scores: bins must be >= 1");

  double d_max = 0.0;
  for (const auto& c : coords) d_max = std::max(d_max, c.d);

  DistributionScores out;
  if (d_max == 0.0) {
    out.distance = 1.0;
  } else {
    std::vector<double> hist(static_cast<std::size_t>(bins_d), 0.0);
    for (const auto& c : coords) {
      const auto bin = static_cast<std::size_t>(c.d / d_max * bins_d);
      hist[std::min(bin, hist.size() - 1)] += 1.0;
    }
    out.distance = uniformity_score(hist);
  }

  std::vector<double> hist(static_cast<std::size_t>(bins_alpha), 0.0);
  for (const auto& c : coords) {
    const auto bin =
        static_cast<std::size_t>((c.alpha + std::numbers::pi) / (2.0 * std::numbers::pi) * bins_alpha);
    hist[std::min(bin, hist.size() - 1)] += 1.0;
  }
  out.angle = uniformity_score(hist);
  return out;
}

double combine_scores(double s_m, double s_d, double s_alpha, const SelectionConfig& config) {
  return config.lambda_m * s_m + config.lambda_d * s_d + config.lambda_alpha * s_alpha;
}

VisibilityScore score_mask(const ContextMask& mask, ImageSize image,
                           const SelectionConfig& config) {
  const auto coords = polar_coordinates(mask.pixels, image);
  const auto dist = distribution_scores(coords, config.bins_d, config.bins_alpha);
  VisibilityScore s{mask.confidence, dist.distance, dist.angle, 0.0};
  s.total = combine_scores(s.confidence, s.distance, s.angle, config);
  return s;
}

ScoredView score_view(const std::string& view_id, std::span<const ContextMask> masks,
                      ImageSize image, const SelectionConfig& config) {
  ScoredView view{view_id, 0.0, std::nullopt, {}};
  for (std::size_t i = 0; i < masks.size(); ++i) {
    view.all_scores.push_back(score_mask(masks[i], image, config));
    if (!view.best_mask || view.all_scores[i].total > view.score) {
      view.best_mask = i;
      view.score = view.all_scores[i].total;
    }
  }
  return view;
}

std::vector<ScoredView> select_views(std::vector<ScoredView> scored, int max_views) {
  std::erase_if(scored, [](const ScoredView& v) { return !(v.score > 0.0); });
  std::sort(scored.begin(), scored.end(), [](const ScoredView& a, const ScoredView& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.view_id < b.view_id;
  });
  if (max_views >= 0 && scored.size() > static_cast<std::size_t>(max_views)) {
    scored.resize(static_cast<std::size_t>(max_views));
  }
  return scored;
}

std::vector<ContextMask> context_masks_from_detections(const std::string& view_id,
                                                       const DetectSegmentResponse& response) {
  std::vector<ContextMask> out;
  for (const auto& m : response.masks) {
    ContextMask cm{view_id, rle_decode(m.rle).pixels(), m.score};
    if (!cm.pixels.empty()) out.push_back(std::move(cm));
  }
  return out;
}

nlohmann::json to_json(const ContextMask& mask) {
  nlohmann::json pixels = nlohmann::json::array();
  for (const auto& p : mask.pixels) pixels.push_back({p.x, p.y});
  return {{"view_id", mask.view_id}, {"confidence", mask.confidence}, {"pixels", pixels}};
}

ContextMask context_mask_from_json(const nlohmann::json& j) {
  ContextMask m{j.at("view_id").get<std::string>(), {}, j.at("confidence").get<double>()};
  for (const auto& p : j.at("pixels")) m.pixels.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
  return m;
}

nlohmann::json to_json(const ScoredView& view) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& s : view.all_scores) {
    scores.push_back(
        {{"s_m", s.confidence}, {"s_d", s.distance}, {"s_alpha", s.angle}, {"s_total", s.total}});
  }
  nlohmann::json j = {{"view_id", view.view_id}, {"s_o", view.score}, {"components", scores}};
  j["best_mask"] = view.best_mask ? nlohmann::json(*view.best_mask) : nlohmann::json(nullptr);
  return j;
}

ScoredView scored_view_from_json(const nlohmann::json& j) {
  try {
    ScoredView view;
    view.view_id = j.at("view_id").get<std::string>();
    view.score = j.at("s_o").get<double>();
    for (const auto& s : j.at("components")) {
      view.all_scores.push_back({s.at("s_m").get<double>(), s.at("s_d").get<double>(),
                                 s.at("s_alpha").get<double>(), s.at("s_total").get<double>()});
    }
    if (!j.at("best_mask").is_null()) {
      view.best_mask = j.at("best_mask").get<std::size_t>();
      if (*view.best_mask >= view.all_scores.size()) {
        throw ValidationError("scored view " + view.view_id + ": best_mask out of range");
      }
    }
    return view;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scored view: ") + e.what());
  }
}

}  // namespace funcseg
