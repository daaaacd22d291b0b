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

#include "funcseg/error.hpp"
#include "funcseg/model_backends.hpp"

namespace funcseg {

/// The interactions the manipulator may perform; the LLM is told it can only
/// use these, which keeps it from stopping at the container object.
inline constexpr std::string_view kActionList =
    "[rotate, key_press, tip_push, hook_pull, pinch_pull, hook_turn, foot_push, plug_in, unplug]";

struct PromptTemplate {
  std::string system;
  /// Contains the placeholder kDescriptionSlot exactly once.
  std::string user_format;

  static constexpr std::string_view kDescriptionSlot = "{description}";

  /// The built-in prompt (version 1).
  static const PromptTemplate& builtin();
  /// Reads {"system", "user_format"} from a prompt file; any failure is a
  /// ConfigError.
  static PromptTemplate load(const std::string& path);
  void validate() const;
  /// SHA-256 over system + NUL + user_format.
  std::string digest() const;
};

/// Functional object F and contextual object O extracted from a task.
struct ParsedTask {
  std::string functional_object;
  std::string contextual_object;
  std::vector<std::string> action_sequence;
  /// Top-level object first, the acted-on part last.
  std::vector<std::string> hierarchy;

  bool operator==(const ParsedTask&) const = default;
};

nlohmann::json to_json(const ParsedTask& task);
ParsedTask parsed_task_from_json(const nlohmann::json& j);

class TaskParseError : public ParseError {
 public:
  enum class Kind { kNoJson, kMissingField, kEmptyActedOnObject, kNoContextualObject };
  TaskParseError(Kind kind, const std::string& what) : ParseError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Builds the chain-of-thought chat request for a task description
/// (temperature 0). Throws ContractError on an empty description.
ChatRequest build_prompt(std::string_view description,
                         const PromptTemplate& prompt = PromptTemplate::builtin());

/// Lowercases, trims and collapses internal whitespace.
std::string normalize_object_name(std::string_view name);

/// Returns the first balanced {...} in `text` that parses as a JSON object.
std::optional<nlohmann::json> extract_json_object(std::string_view text);

/// Parses an LLM reply into a ParsedTask. F is acted_on_object; O is the
/// first hierarchy entry, with the hierarchy reversed first when it starts at
/// F. If O still equals F, O falls back to the last hierarchy entry that is
/// not F.
ParsedTask parse_response(std::string_view text);

/// Queries the backend and parses the reply, re-asking up to `retries` more
/// times when the reply does not parse. Rethrows the last TaskParseError.
ParsedTask understand_task(ModelBackend& backend, std::string_view description, int retries = 2,
                           const PromptTemplate& prompt = PromptTemplate::builtin());

}  // namespace funcseg
