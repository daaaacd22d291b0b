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

#include <stdexcept>
#include <string>

namespace funcseg {

/// Base class of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Input file or wire payload could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Parsed data violates a schema or domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// HTTP backend gave up after exhausting its retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Replay backend has no recorded response for a request digest.
class FixtureMissError : public Error {
 public:
  FixtureMissError(std::string digest, const std::string& what)
      : Error(what), digest_(std::move(digest)) {}
  const std::string& digest() const noexcept { return digest_; }

 private:
  std::string digest_;
};

/// A pipeline stage needs an artifact that is not cached and cannot be
/// computed because no backend is attached.
class MissingArtifactError : public Error {
 public:
  MissingArtifactError(std::string stage, const std::string& what)
      : Error(what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace funcseg
