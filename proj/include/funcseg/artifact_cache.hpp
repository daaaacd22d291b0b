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

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace funcseg {

/// SHA-256 over the compact dump of `parts`, used as a stage key.
std::string stage_key(const std::string& stage, const nlohmann::json& parts);

struct StageCounters {
  std::size_t hits = 0;
  std::size_t misses = 0;
};

/// Content-addressed store of stage outputs under <root>/<stage>/<key>.json.
/// With an empty root nothing is persisted and every lookup misses.
class ArtifactCache {
 public:
  explicit ArtifactCache(std::string root);

  bool enabled() const { return !root_.empty(); }

  /// Returns the stored payload, counting a hit or a miss for `stage`.
  std::optional<nlohmann::json> get(const std::string& stage, const std::string& key);
  /// Stores {stage, key, config_digest, payload}.
  void put(const std::string& stage, const std::string& key, const std::string& config_digest,
           const nlohmann::json& payload);
  std::string path_for(const std::string& stage, const std::string& key) const;

  std::map<std::string, StageCounters> counters() const;
  void reset_counters();

 private:
  std::string root_;
  mutable std::mutex mutex_;
  std::map<std::string, StageCounters> counters_;
};

}  // namespace funcseg
