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

#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "funcseg/functional_seg.hpp"
#include "funcseg/model_backends.hpp"
#include "funcseg/view_selection.hpp"

namespace funcseg {

inline constexpr double kDefaultTau = 0.7;
inline constexpr const char* kEnvPrefix = "FUNCSEG_";

struct PipelineConfig {
  std::string dataset_root;
  /// Empty disables the artifact cache.
  std::string cache_dir;

  // Exactly one of fixture_dir / backend_url must be set to run stages that
  // call models. With neither, the pipeline only reads cached artifacts.
  std::string fixture_dir;
  std::string backend_url;
  /// Per-service overrides of backend_url.
  std::string chat_url, detect_segment_url, point_url, segment_points_url;
  /// When set together with backend_url, every exchange is stored here.
  std::string record_fixtures_dir;
  double timeout_s = 120.0;
  int max_attempts = 3;
  int max_in_flight = 8;
  int initial_backoff_ms = 500;

  /// Optional prompt file; prompt_sha256 pins its digest when set.
  std::string prompt_file;
  std::string prompt_sha256;
  int parse_retries = 2;

  SelectionConfig selection;
  QueryMode query_mode = QueryMode::kWithDescription;
  double lift_radius = 0.02;
  double tau = kDefaultTau;
  /// Overrides each scene manifest's depth scale when set.
  std::optional<double> depth_scale;

  int jobs = 1;

  /// Throws ConfigError.
  void validate() const;
  bool has_backend() const { return !fixture_dir.empty() || !backend_url.empty(); }
  HttpBackendConfig http_config() const;

  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::string& path);
  nlohmann::json to_json() const;
  /// SHA-256 of to_json() without the fields that cannot change results
  /// (jobs, timeouts, cache location).
  std::string digest() const;

  /// Applies FUNCSEG_* variables, e.g. FUNCSEG_TAU or FUNCSEG_FIXTURES.
  /// `getenv` is injectable for tests.
  void apply_environment(const std::function<const char*(const char*)>& getenv);
};

/// Builds the backend described by the config: replay from fixture_dir,
/// HTTP (optionally recording), or nullptr for cache-only operation.
std::shared_ptr<ModelBackend> make_backend(const PipelineConfig& config);

}  // namespace funcseg
