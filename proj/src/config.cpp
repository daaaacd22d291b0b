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

#include "funcseg/config.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include <fmt/format.h>

#include "funcseg/digest.hpp"
#include "funcseg/error.hpp"
#include "funcseg/task_parsing.hpp"

namespace funcseg {

void PipelineConfig::validate() const {
  selection.validate();
  if (!fixture_dir.empty() && !backend_url.empty()) {
    throw ConfigError("config: set either fixture_dir or backend_url, not both");
  }
  if (!record_fixtures_dir.empty() && backend_url.empty()) {
    throw ConfigError("config: recording fixtures requires backend_url");
  }
  if (!(tau >= 0.0 && tau < 1.0)) {
    throw ConfigError(fmt::format("config: tau = {} must lie in [0, 1)", tau));
  }
  if (!(lift_radius > 0.0) || !std::isfinite(lift_radius)) {
    throw ConfigError("config: lift_radius must be > 0");
  }
  if (depth_scale && (!(*depth_scale > 0.0) || !std::isfinite(*depth_scale))) {
    throw ConfigError("config: depth_scale must be > 0");
  }
  if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
  if (parse_retries < 0) throw ConfigError("config: parse_retries must be >= 0");
  if (max_attempts < 1) throw ConfigError("config: max_attempts must be >= 1");
  if (max_in_flight < 1) throw ConfigError("config: max_in_flight must be >= 1");
  if (!(timeout_s > 0.0)) throw ConfigError("config: timeout_s must be > 0");
  if (!prompt_file.empty()) {
    const auto prompt = PromptTemplate::load(prompt_file);
    if (!prompt_sha256.empty() && prompt.digest() != prompt_sha256) {
      throw ConfigError(fmt::format("config: prompt file {} has digest {}, config pins {}",
                                    prompt_file, prompt.digest(), prompt_sha256));
    }
  }
}

HttpBackendConfig PipelineConfig::http_config() const {
  HttpBackendConfig c = HttpBackendConfig::with_base_url(backend_url);
  if (!chat_url.empty()) c.chat_url = chat_url;
  if (!detect_segment_url.empty()) c.detect_segment_url = detect_segment_url;
  if (!point_url.empty()) c.point_url = point_url;
  if (!segment_points_url.empty()) c.segment_points_url = segment_points_url;
  c.timeout_s = timeout_s;
  c.max_attempts = max_attempts;
  c.max_in_flight = max_in_flight;
  c.initial_backoff = std::chrono::milliseconds(initial_backoff_ms);
  return c;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    c.dataset_root = j.value("dataset_root", c.dataset_root);
    c.cache_dir = j.value("cache_dir", c.cache_dir);
    c.prompt_file = j.value("prompt_file", c.prompt_file);
    c.prompt_sha256 = j.value("prompt_sha256", c.prompt_sha256);
    c.parse_retries = j.value("parse_retries", c.parse_retries);
    c.jobs = j.value("jobs", c.jobs);
    c.tau = j.value("tau", c.tau);
    if (j.contains("backend")) {
      const auto& b = j.at("backend");
      c.fixture_dir = b.value("fixture_dir", c.fixture_dir);
      c.backend_url = b.value("base_url", c.backend_url);
      c.chat_url = b.value("chat_url", c.chat_url);
      c.detect_segment_url = b.value("detect_segment_url", c.detect_segment_url);
      c.point_url = b.value("point_url", c.point_url);
      c.segment_points_url = b.value("segment_points_url", c.segment_points_url);
      c.record_fixtures_dir = b.value("record_fixtures_dir", c.record_fixtures_dir);
      c.timeout_s = b.value("timeout_s", c.timeout_s);
      c.max_attempts = b.value("max_attempts", c.max_attempts);
      c.max_in_flight = b.value("max_in_flight", c.max_in_flight);
      c.initial_backoff_ms = b.value("initial_backoff_ms", c.initial_backoff_ms);
    }
    if (j.contains("selection")) {
      const auto& s = j.at("selection");
      c.selection.lambda_m = s.value("lambda_m", c.selection.lambda_m);
      c.selection.lambda_d = s.value("lambda_d", c.selection.lambda_d);
      c.selection.lambda_alpha = s.value("lambda_alpha", c.selection.lambda_alpha);
      c.selection.max_views = s.value("views", c.selection.max_views);
      c.selection.bins_d = s.value("bins_d", c.selection.bins_d);
      c.selection.bins_alpha = s.value("bins_alpha", c.selection.bins_alpha);
    }
    if (j.contains("segmentation")) {
      c.query_mode = query_mode_from_string(
          j.at("segmentation").value("query_mode", std::string(to_string(c.query_mode))));
    }
    if (j.contains("lifting")) {
      const auto& l = j.at("lifting");
      c.lift_radius = l.value("radius", c.lift_radius);
      if (l.contains("depth_scale") && !l.at("depth_scale").is_null()) {
        c.depth_scale = l.at("depth_scale").get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("config file: ") + e.what());
  }
  try {
    PipelineConfig config = from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
    // Relative paths are taken relative to the config file.
    const auto base = std::filesystem::path(path).parent_path();
    for (std::string* field : {&config.dataset_root, &config.cache_dir, &config.fixture_dir,
                               &config.record_fixtures_dir, &config.prompt_file}) {
      if (!field->empty() && std::filesystem::path(*field).is_relative()) {
        *field = (base / *field).lexically_normal().string();
      }
    }
    return config;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

nlohmann::json PipelineConfig::to_json() const {
  return {
      {"dataset_root", dataset_root},
      {"cache_dir", cache_dir},
      {"prompt_file", prompt_file},
      {"prompt_sha256", prompt_sha256},
      {"parse_retries", parse_retries},
      {"jobs", jobs},
      {"tau", tau},
      {"backend",
       {{"fixture_dir", fixture_dir},
        {"base_url", backend_url},
        {"chat_url", chat_url},
        {"detect_segment_url", detect_segment_url},
        {"point_url", point_url},
        {"segment_points_url", segment_points_url},
        {"record_fixtures_dir", record_fixtures_dir},
        {"timeout_s", timeout_s},
        {"max_attempts", max_attempts},
        {"max_in_flight", max_in_flight},
        {"initial_backoff_ms", initial_backoff_ms}}},
      {"selection",
       {{"lambda_m", selection.lambda_m},
        {"lambda_d", selection.lambda_d},
        {"lambda_alpha", selection.lambda_alpha},
        {"views", selection.max_views},
        {"bins_d", selection.bins_d},
        {"bins_alpha", selection.bins_alpha}}},
      {"segmentation", {{"query_mode", to_string(query_mode)}}},
      {"lifting",
       {{"radius", lift_radius},
        {"depth_scale", depth_scale ? nlohmann::json(*depth_scale) : nlohmann::json(nullptr)}}},
  };
}

std::string PipelineConfig::digest() const {
  nlohmann::json j = to_json();
  j.erase("jobs");
  j.erase("cache_dir");
  for (const char* k : {"timeout_s", "max_attempts", "max_in_flight", "initial_backoff_ms",
                        "record_fixtures_dir"}) {
    j["backend"].erase(k);
  }
  return sha256_hex(j.dump());
}

void PipelineConfig::apply_environment(const std::function<const char*(const char*)>& getenv) {
  auto text = [&](const char* name, std::string& field) {
    if (const char* v = getenv((std::string(kEnvPrefix) + name).c_str())) field = v;
  };
  auto number = [&](const char* name, auto& field) {
    const std::string key = std::string(kEnvPrefix) + name;
    if (const char* v = getenv(key.c_str())) {
      std::size_t used = 0;
      try {
        if constexpr (std::is_same_v<std::decay_t<decltype(field)>, int>) {
          field = std::stoi(v, &used);
        } else {
          field = std::stod(v, &used);
        }
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || v[used] != '\0') throw ConfigError(key + ": not a number: '" + v + "'");
    }
  };
  text("DATASET_ROOT", dataset_root);
  text("CACHE_DIR", cache_dir);
  text("FIXTURES", fixture_dir);
  text("BACKEND_URL", backend_url);
  text("CHAT_URL", chat_url);
  text("DETECT_SEGMENT_URL", detect_segment_url);
  text("POINT_URL", point_url);
  text("SEGMENT_POINTS_URL", segment_points_url);
  text("RECORD_FIXTURES", record_fixtures_dir);
  number("TIMEOUT_S", timeout_s);
  number("MAX_ATTEMPTS", max_attempts);
  number("MAX_IN_FLIGHT", max_in_flight);
  number("TAU", tau);
  number("VIEWS", selection.max_views);
  number("LIFT_RADIUS", lift_radius);
  number("JOBS", jobs);
}

std::shared_ptr<ModelBackend> make_backend(const PipelineConfig& config) {
  if (!config.fixture_dir.empty()) return std::make_shared<FixtureBackend>(config.fixture_dir);
  if (!config.backend_url.empty()) {
    auto http = std::make_shared<HttpBackend>(config.http_config());
    if (!config.record_fixtures_dir.empty()) {
      return std::make_shared<RecordingBackend>(http, config.record_fixtures_dir);
    }
    return http;
  }
  return nullptr;
}

}  // namespace funcseg
