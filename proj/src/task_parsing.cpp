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

#include "funcseg/task_parsing.hpp"

#include <algorithm>
#include <cctype>

#include <spdlog/spdlog.h>

#include "funcseg/digest.hpp"

namespace funcseg {
namespace {

constexpr std::string_view kSystemMessage =
    "You are an AI System that has to provide JSON files to a robotic system so that it can "
    "interact with our physical world, based on a natural language prompt. In particular, you "
    "have to help the robot in identify which object parts it has to interact with to solve "
    "particular tasks. Its set of possible actions are "
    "[rotate, key_press, tip_push, hook_pull, pinch_pull, hook_turn, foot_push, plug_in, unplug]";

constexpr std::string_view kUserFormat =
    "How do I {description}? Respond directly with only the json with the following format. {\n"
    "\"task_solving_sequence\": a list of strings with the description of what I have to do to "
    "accomplish the task described by the prompt, subdivided in subtasks.,\n"
    "\"acted_on_object\": a string with the name of the object part on which I have to act on.,\n"
    "\"acted_on_object_hierarchy\": a list of object parts from the top level object to the "
    "object part.\n"
    "}";

std::vector<std::string> string_list(const nlohmann::json& j, const char* field) {
  if (!j.contains(field)) {
    throw TaskParseError(TaskParseError::Kind::kMissingField,
                         std::string("LLM response lacks field '") + field + "'");
  }
  const auto& v = j[field];
  if (!v.is_array()) {
    throw TaskParseError(TaskParseError::Kind::kMissingField,
                         std::string("LLM response field '") + field + "' is not a list");
  }
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) {
      throw TaskParseError(TaskParseError::Kind::kMissingField,
                           std::string("LLM response field '") + field +
                               "' holds a non-string entry");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

const PromptTemplate& PromptTemplate::builtin() {
  static const PromptTemplate prompt{std::string(kSystemMessage), std::string(kUserFormat)};
  return prompt;
}

PromptTemplate PromptTemplate::load(const std::string& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("prompt file: ") + e.what());
  }
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    PromptTemplate p{j.at("system").get<std::string>(), j.at("user_format").get<std::string>()};
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void PromptTemplate::validate() const {
  if (system.find(kActionList) == std::string::npos) {
    throw ConfigError("prompt: system message must contain the action list");
  }
  const auto first = user_format.find(kDescriptionSlot);
  if (first == std::string::npos ||
      user_format.find(kDescriptionSlot, first + 1) != std::string::npos) {
    throw ConfigError("prompt: user_format must contain {description} exactly once");
  }
}

std::string PromptTemplate::digest() const {
  std::string material = system;
  material.push_back('\0');
  material += user_format;
  return sha256_hex(material);
}

nlohmann::json to_json(const ParsedTask& t) {
  return {{"functional_object", t.functional_object},
          {"contextual_object", t.contextual_object},
          {"action_sequence", t.action_sequence},
          {"hierarchy", t.hierarchy}};
}

ParsedTask parsed_task_from_json(const nlohmann::json& j) {
  return {j.at("functional_object").get<std::string>(), j.at("contextual_object").get<std::string>(),
          j.at("action_sequence").get<std::vector<std::string>>(),
          j.at("hierarchy").get<std::vector<std::string>>()};
}

ChatRequest build_prompt(std::string_view description, const PromptTemplate& prompt) {
  if (description.empty()) throw ContractError("task description must not be empty");
  std::string user = prompt.user_format;
  const auto slot = user.find(PromptTemplate::kDescriptionSlot);
  user.replace(slot, PromptTemplate::kDescriptionSlot.size(), description);
  return {prompt.system, std::move(user), 0.0};
}

std::string normalize_object_name(std::string_view name) {
  std::string out;
  bool pending_space = false;
  for (char c : name) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::optional<nlohmann::json> extract_json_object(std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        auto parsed = nlohmann::json::parse(text.substr(start, i - start + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
        break;
      }
    }
  }
  return std::nullopt;
}

ParsedTask parse_response(std::string_view text) {
  const auto j = extract_json_object(text);
  if (!j) throw TaskParseError(TaskParseError::Kind::kNoJson, "no JSON object in LLM response");

  ParsedTask task;
  task.action_sequence = string_list(*j, "task_solving_sequence");
  if (!j->contains("acted_on_object")) {
    throw TaskParseError(TaskParseError::Kind::kMissingField,
                         "LLM response lacks field 'acted_on_object'");
  }
  const auto& acted = (*j)["acted_on_object"];
  if (!acted.is_string()) {
    throw TaskParseError(TaskParseError::Kind::kMissingField,
                         "LLM response field 'acted_on_object' is not a string");
  }
  task.functional_object = normalize_object_name(acted.get<std::string>());
  if (task.functional_object.empty()) {
    throw TaskParseError(TaskParseError::Kind::kEmptyActedOnObject,
                         "LLM response has an empty 'acted_on_object'");
  }
  for (auto& entry : string_list(*j, "acted_on_object_hierarchy")) {
    auto name = normalize_object_name(entry);
    if (!name.empty()) task.hierarchy.push_back(std::move(name));
  }
  const std::string& f = task.functional_object;
  if (!task.hierarchy.empty() && task.hierarchy.front() == f) {
    std::reverse(task.hierarchy.begin(), task.hierarchy.end());
  }
  if (!task.hierarchy.empty() && task.hierarchy.front() != f) {
    task.contextual_object = task.hierarchy.front();
  } else {
    const auto it = std::find_if(task.hierarchy.rbegin(), task.hierarchy.rend(),
                                 [&](const std::string& s) { return s != f; });
    if (it == task.hierarchy.rend()) {
      throw TaskParseError(TaskParseError::Kind::kNoContextualObject,
                           "LLM response names no contextual object distinct from '" + f + "'");
    }
    task.contextual_object = *it;
  }
  return task;
}

ParsedTask understand_task(ModelBackend& backend, std::string_view description, int retries,
                           const PromptTemplate& prompt) {
  const ChatRequest request = build_prompt(description, prompt);
  for (int attempt = 0;; ++attempt) {
    const ChatResponse response = backend.chat(request);
    try {
      return parse_response(response.text);
    } catch (const TaskParseError& e) {
      if (attempt >= retries) throw;
      spdlog::warn("task '{}': unparsable LLM reply ({}), retrying", description, e.what());
    }
  }
}

}  // namespace funcseg
