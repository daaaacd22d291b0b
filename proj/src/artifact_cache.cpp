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

#include "funcseg/artifact_cache.hpp"

#include <filesystem>

#include <spdlog/spdlog.h>

#include "funcseg/digest.hpp"

namespace funcseg {

std::string stage_key(const std::string& stage, const nlohmann::json& parts) {
  return sha256_hex(nlohmann::json{{"stage", stage}, {"inputs", parts}}.dump());
}

ArtifactCache::ArtifactCache(std::string root) : root_(std::move(root)) {}

std::string ArtifactCache::path_for(const std::string& stage, const std::string& key) const {
  return (std::filesystem::path(root_) / stage / (key + ".json")).string();
}

std::optional<nlohmann::json> ArtifactCache::get(const std::string& stage,
                                                 const std::string& key) {
  std::optional<nlohmann::json> found;
  if (enabled()) {
    const auto path = path_for(stage, key);
    if (std::filesystem::exists(path)) {
      const auto bytes = read_file_bytes(path);
      auto j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
      if (!j.is_discarded() && j.contains("payload") && j.value("key", "") == key) {
        found = std::move(j["payload"]);
      } else {
        spdlog::warn("cache: ignoring corrupt artifact {}", path);
      }
    }
  }
  std::lock_guard lock(mutex_);
  auto& c = counters_[stage];
  if (found) {
    ++c.hits;
    spdlog::debug("cache hit: {} {}", stage, key.substr(0, 12));
  } else {
    ++c.misses;
    spdlog::debug("cache miss: {} {}", stage, key.substr(0, 12));
  }
  return found;
}

void ArtifactCache::put(const std::string& stage, const std::string& key,
                        const std::string& config_digest, const nlohmann::json& payload) {
  if (!enabled()) return;
  const nlohmann::json artifact = {
      {"stage", stage}, {"key", key}, {"config_digest", config_digest}, {"payload", payload}};
  write_file_atomic(path_for(stage, key), artifact.dump() + "\n");
}

std::map<std::string, StageCounters> ArtifactCache::counters() const {
  std::lock_guard lock(mutex_);
  return counters_;
}

void ArtifactCache::reset_counters() {
  std::lock_guard lock(mutex_);
  counters_.clear();
}

}  // namespace funcseg
