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

#include <deque>
#include <map>
#include <mutex>
#include <vector>

#include "funcseg/error.hpp"
#include "funcseg/model_backends.hpp"

namespace funcseg::testing {

/// Hands out queued raw responses per endpoint and records every request.
class ScriptedBackend final : public ModelBackend {
 public:
  void push(Endpoint e, nlohmann::json response) { queue_[e].push_back(std::move(response)); }

  std::string identity() const override { return "scripted"; }
  nlohmann::json call(Endpoint e, const nlohmann::json& wire,
                      const nlohmann::json& canonical) override {
    std::lock_guard lock(mu_);
    requests.push_back({e, wire, canonical});
    auto& q = queue_[e];
    if (q.empty()) throw TransportError("scripted backend: nothing queued");
    auto r = std::move(q.front());
    q.pop_front();
    return r;
  }

  struct Seen {
    Endpoint endpoint;
    nlohmann::json wire;
    nlohmann::json canonical;
  };
  std::vector<Seen> requests;

 private:
  std::mutex mu_;
  std::map<Endpoint, std::deque<nlohmann::json>> queue_;
};

}  // namespace funcseg::testing
