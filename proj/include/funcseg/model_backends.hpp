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

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "funcseg/mask.hpp"
#include "funcseg/png_io.hpp"

namespace funcseg {

struct ChatRequest {
  std::string system;
  std::string user;
  double temperature = 0.0;
};

struct ChatResponse {
  std::string text;
};

/// Open-vocabulary detection plus segmentation of `query` in a PNG image.
struct DetectSegmentRequest {
  std::vector<std::uint8_t> image;  // encoded PNG
  std::string query;
};

struct ScoredMask {
  Rle rle;
  double score = 0.0;
};

struct DetectSegmentResponse {
  std::vector<ScoredMask> masks;  // empty: object absent from the image
};

struct NormalizedPoint {
  double x = 0.0;  // fraction of image width, in [0, 1]
  double y = 0.0;  // fraction of image height, in [0, 1]
};

struct PointRequest {
  std::vector<std::uint8_t> image;
  std::string query;
};

struct PointResponse {
  std::vector<NormalizedPoint> points;
};

struct SegmentPointsRequest {
  std::vector<std::uint8_t> image;
  std::vector<PixelCoord> points;
};

struct SegmentPointsResponse {
  Rle mask;
};

enum class Endpoint { kChat, kDetectSegment, kPoint, kSegmentPoints };

std::string_view endpoint_path(Endpoint endpoint);
Endpoint endpoint_from_path(std::string_view path);

// Wire encoding. Requests carry images as base64 PNG; the canonical form
// replaces the image with its SHA-256 and size and is what fixture digests
// are computed over.
nlohmann::json to_wire(const ChatRequest& request);
nlohmann::json to_wire(const DetectSegmentRequest& request);
nlohmann::json to_wire(const PointRequest& request);
nlohmann::json to_wire(const SegmentPointsRequest& request);

nlohmann::json canonical_request(const ChatRequest& request);
nlohmann::json canonical_request(const DetectSegmentRequest& request);
nlohmann::json canonical_request(const PointRequest& request);
nlohmann::json canonical_request(const SegmentPointsRequest& request);

/// SHA-256 of the canonical request's compact JSON dump.
std::string request_digest(const nlohmann::json& canonical);

// Response validation. Every response leaving the backend layer went through
// one of these; they throw ValidationError.
ChatResponse parse_chat_response(const nlohmann::json& j);
DetectSegmentResponse parse_detect_segment_response(const nlohmann::json& j, ImageSize image);
PointResponse parse_point_response(const nlohmann::json& j);
SegmentPointsResponse parse_segment_points_response(const nlohmann::json& j, ImageSize image);

/// Dispatches to the parse_* validator for \`endpoint\`; the canonical
/// request supplies the image size.
void validate_raw_response(Endpoint endpoint, const nlohmann::json& response,
                           const nlohmann::json& canonical);

nlohmann::json to_json(const ChatResponse& response);
nlohmann::json to_json(const DetectSegmentResponse& response);
nlohmann::json to_json(const PointResponse& response);
nlohmann::json to_json(const SegmentPointsResponse& response);

/// Converts a normalized point to pixel coordinates: multiply by the image
/// size, round half away from zero, clamp into the image.
PixelCoord denormalize(const NormalizedPoint& p, ImageSize image);

/// Inference interface the pipeline talks to. Implementations supply raw
/// JSON responses through `call`; this class validates them.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  ChatResponse chat(const ChatRequest& request);
  DetectSegmentResponse detect_segment(const DetectSegmentRequest& request);
  PointResponse point(const PointRequest& request);
  SegmentPointsResponse segment_points(const SegmentPointsRequest& request);

  /// Stable description of where responses come from; participates in
  /// pipeline cache keys.
  virtual std::string identity() const = 0;

  /// Returns the raw response body for one request. Must be thread-safe.
  virtual nlohmann::json call(Endpoint endpoint, const nlohmann::json& wire,
                              const nlohmann::json& canonical) = 0;
};

struct HttpBackendConfig {
  std::string chat_url;
  std::string detect_segment_url;
  std::string point_url;
  std::string segment_points_url;
  double timeout_s = 120.0;
  int max_attempts = 3;
  int max_in_flight = 8;
  std::chrono::milliseconds initial_backoff{500};

  /// Uses one base URL for all four services.
  static HttpBackendConfig with_base_url(const std::string& base_url);
};

/// JSON-over-HTTP client for the four inference services. Transport errors
/// and 5xx responses are retried with exponential backoff.
class HttpBackend final : public ModelBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  std::string identity() const override;
  nlohmann::json call(Endpoint endpoint, const nlohmann::json& wire,
                      const nlohmann::json& canonical) override;

  const HttpBackendConfig& config() const { return config_; }

 private:
  const std::string& base_url(Endpoint endpoint) const;

  HttpBackendConfig config_;
  std::counting_semaphore<4096> in_flight_;
};

/// One recorded exchange, stored as <digest>.json in a fixture directory.
struct Fixture {
  std::string digest;
  Endpoint endpoint = Endpoint::kChat;
  nlohmann::json request;  // canonical form
  nlohmann::json response;
};

nlohmann::json fixture_to_json(const Fixture& fixture);
/// Writes <directory>/<digest>.json.
void write_fixture(const std::string& directory, const Fixture& fixture);

/// Replays recorded responses keyed by request digest. All fixtures are read
/// and validated at construction; lookups afterwards are read-only.
class FixtureBackend final : public ModelBackend {
 public:
  explicit FixtureBackend(const std::string& directory);

  /// "fixtures:" plus a digest over every recorded exchange.
  std::string identity() const override { return "fixtures:" + fingerprint_; }
  nlohmann::json call(Endpoint endpoint, const nlohmann::json& wire,
                      const nlohmann::json& canonical) override;

  std::size_t size() const { return fixtures_.size(); }

 private:
  std::string directory_;
  std::map<std::string, Fixture> fixtures_;
  std::string fingerprint_;
};

/// Forwards to another backend and stores every exchange as a fixture.
class RecordingBackend final : public ModelBackend {
 public:
  RecordingBackend(std::shared_ptr<ModelBackend> inner, std::string directory);

  std::string identity() const override { return inner_->identity(); }
  nlohmann::json call(Endpoint endpoint, const nlohmann::json& wire,
                      const nlohmann::json& canonical) override;

 private:
  std::shared_ptr<ModelBackend> inner_;
  std::string directory_;
};

}  // namespace funcseg
