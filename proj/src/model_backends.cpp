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

#include "funcseg/model_backends.hpp"

#include <cmath>
#include <filesystem>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "funcseg/digest.hpp"
#include "funcseg/error.hpp"

namespace funcseg {
namespace {

nlohmann::json image_fields(const std::vector<std::uint8_t>& image) {
  const ImageSize size = png_size(image);
  return {{"image_sha256", sha256_hex(image)}, {"image_size", {size.height, size.width}}};
}

ImageSize image_size_from_canonical(const nlohmann::json& canonical) {
  const auto& s = canonical.at("image_size");
  return {s.at(1).get<int>(), s.at(0).get<int>()};
}

nlohmann::json points_json(const std::vector<PixelCoord>& points) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : points) out.push_back({p.x, p.y});
  return out;
}

double unit_interval(const nlohmann::json& v, const char* what) {
  if (!v.is_number()) throw ValidationError(fmt::format("{} must be a number", what));
  const double x = v.get<double>();
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ValidationError(fmt::format("{} = {} is outside [0, 1]", what, x));
  }
  return x;
}

void check_rle_matches(const Rle& rle, ImageSize image, const char* what) {
  if (rle.size != image) {
    throw ValidationError(fmt::format("{} is {}x{} but the image is {}x{}", what, rle.size.width,
                                      rle.size.height, image.width, image.height));
  }
  rle_decode(rle);  // checks the run total
}

template <typename Fn>
auto wrap_json_errors(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("{} response: {}", what, e.what()));
  }
}

/// Splits "http://host:port/prefix" into the scheme+authority and the path
/// prefix, which httplib wants separately.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const std::size_t authority_start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', authority_start);
  if (slash == std::string::npos) return {url, ""};
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

}  // namespace

void validate_raw_response(Endpoint endpoint, const nlohmann::json& response,
                           const nlohmann::json& canonical) {
  switch (endpoint) {
    case Endpoint::kChat:
      parse_chat_response(response);
      break;
    case Endpoint::kDetectSegment:
      parse_detect_segment_response(response, image_size_from_canonical(canonical));
      break;
    case Endpoint::kPoint:
      parse_point_response(response);
      break;
    case Endpoint::kSegmentPoints:
      parse_segment_points_response(response, image_size_from_canonical(canonical));
      break;
  }
}

std::string_view endpoint_path(Endpoint endpoint) {
  switch (endpoint) {
    case Endpoint::kChat:
      return "/v1/chat";
    case Endpoint::kDetectSegment:
      return "/v1/detect_segment";
    case Endpoint::kPoint:
      return "/v1/point";
    case Endpoint::kSegmentPoints:
      return "/v1/segment_points";
  }
  return "";
}

Endpoint endpoint_from_path(std::string_view path) {
  for (Endpoint e : {Endpoint::kChat, Endpoint::kDetectSegment, Endpoint::kPoint,
                     Endpoint::kSegmentPoints}) {
    if (endpoint_path(e) == path) return e;
  }
  throw ValidationError("unknown endpoint '" + std::string(path) + "'");
}

nlohmann::json to_wire(const ChatRequest& r) {
  return {{"system", r.system}, {"user", r.user}, {"temperature", r.temperature}};
}
nlohmann::json to_wire(const DetectSegmentRequest& r) {
  return {{"image", base64_encode(r.image)}, {"query", r.query}};
}
nlohmann::json to_wire(const PointRequest& r) {
  return {{"image", base64_encode(r.image)}, {"query", r.query}};
}
nlohmann::json to_wire(const SegmentPointsRequest& r) {
  return {{"image", base64_encode(r.image)}, {"points", points_json(r.points)}};
}

nlohmann::json canonical_request(const ChatRequest& r) {
  nlohmann::json j = to_wire(r);
  j["endpoint"] = endpoint_path(Endpoint::kChat);
  return j;
}
nlohmann::json canonical_request(const DetectSegmentRequest& r) {
  nlohmann::json j = image_fields(r.image);
  j["endpoint"] = endpoint_path(Endpoint::kDetectSegment);
  j["query"] = r.query;
  return j;
}
nlohmann::json canonical_request(const PointRequest& r) {
  nlohmann::json j = image_fields(r.image);
  j["endpoint"] = endpoint_path(Endpoint::kPoint);
  j["query"] = r.query;
  return j;
}
nlohmann::json canonical_request(const SegmentPointsRequest& r) {
  nlohmann::json j = image_fields(r.image);
  j["endpoint"] = endpoint_path(Endpoint::kSegmentPoints);
  j["points"] = points_json(r.points);
  return j;
}

std::string request_digest(const nlohmann::json& canonical) {
  return sha256_hex(canonical.dump());
}

ChatResponse parse_chat_response(const nlohmann::json& j) {
  return wrap_json_errors("chat", [&] {
    const auto& text = j.at("text");
    if (!text.is_string()) throw ValidationError("chat response: text must be a string");
    return ChatResponse{text.get<std::string>()};
  });
}

DetectSegmentResponse parse_detect_segment_response(const nlohmann::json& j, ImageSize image) {
  return wrap_json_errors("detect_segment", [&] {
    DetectSegmentResponse out;
    const auto& masks = j.at("masks");
    if (!masks.is_array()) throw ValidationError("detect_segment response: masks must be a list");
    for (const auto& m : masks) {
      ScoredMask sm;
      sm.rle = rle_from_json(m.at("rle"));
      check_rle_matches(sm.rle, image, "detect_segment mask");
      sm.score = unit_interval(m.at("score"), "detect_segment score");
      out.masks.push_back(std::move(sm));
    }
    return out;
  });
}

PointResponse parse_point_response(const nlohmann::json& j) {
  return wrap_json_errors("point", [&] {
    PointResponse out;
    const auto& points = j.at("points");
    if (!points.is_array()) throw ValidationError("point response: points must be a list");
    for (const auto& p : points) {
      out.points.push_back({unit_interval(p.at("x"), "point x"), unit_interval(p.at("y"), "point y")});
    }
    return out;
  });
}

SegmentPointsResponse parse_segment_points_response(const nlohmann::json& j, ImageSize image) {
  return wrap_json_errors("segment_points", [&] {
    SegmentPointsResponse out{rle_from_json(j.at("mask"))};
    check_rle_matches(out.mask, image, "segment_points mask");
    return out;
  });
}

nlohmann::json to_json(const ChatResponse& r) { return {{"text", r.text}}; }

nlohmann::json to_json(const DetectSegmentResponse& r) {
  nlohmann::json masks = nlohmann::json::array();
  for (const auto& m : r.masks) masks.push_back({{"rle", rle_to_json(m.rle)}, {"score", m.score}});
  return {{"masks", masks}};
}

nlohmann::json to_json(const PointResponse& r) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : r.points) points.push_back({{"x", p.x}, {"y", p.y}});
  return {{"points", points}};
}

nlohmann::json to_json(const SegmentPointsResponse& r) { return {{"mask", rle_to_json(r.mask)}}; }

PixelCoord denormalize(const NormalizedPoint& p, ImageSize image) {
  // std::round rounds half away from zero.
  const long x = std::lround(p.x * image.width);
  const long y = std::lround(p.y * image.height);
  return {static_cast<int>(std::clamp<long>(x, 0, image.width - 1)),
          static_cast<int>(std::clamp<long>(y, 0, image.height - 1))};
}

ChatResponse ModelBackend::chat(const ChatRequest& request) {
  if (request.system.empty() || request.user.empty()) {
    throw ContractError("chat request needs non-empty system and user messages");
  }
  if (!(request.temperature >= 0.0)) throw ContractError("chat temperature must be >= 0");
  return parse_chat_response(call(Endpoint::kChat, to_wire(request), canonical_request(request)));
}

DetectSegmentResponse ModelBackend::detect_segment(const DetectSegmentRequest& request) {
  const auto canonical = canonical_request(request);
  return parse_detect_segment_response(
      call(Endpoint::kDetectSegment, to_wire(request), canonical),
      image_size_from_canonical(canonical));
}

PointResponse ModelBackend::point(const PointRequest& request) {
  return parse_point_response(
      call(Endpoint::kPoint, to_wire(request), canonical_request(request)));
}

SegmentPointsResponse ModelBackend::segment_points(const SegmentPointsRequest& request) {
  const auto canonical = canonical_request(request);
  const ImageSize size = image_size_from_canonical(canonical);
  for (const auto& p : request.points) {
    if (p.x < 0 || p.y < 0 || p.x >= size.width || p.y >= size.height) {
      throw ContractError(fmt::format("segment_points prompt ({}, {}) outside {}x{} image", p.x,
                                      p.y, size.width, size.height));
    }
  }
  return parse_segment_points_response(
      call(Endpoint::kSegmentPoints, to_wire(request), canonical), size);
}

HttpBackendConfig HttpBackendConfig::with_base_url(const std::string& base_url) {
  HttpBackendConfig c;
  c.chat_url = c.detect_segment_url = c.point_url = c.segment_points_url = base_url;
  return c;
}

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)), in_flight_(std::max(1, config_.max_in_flight)) {
  if (config_.max_attempts < 1) throw ConfigError("http backend: max_attempts must be >= 1");
  if (config_.max_in_flight < 1 || config_.max_in_flight > 4096) {
    throw ConfigError("http backend: max_in_flight must be in [1, 4096]");
  }
  if (!(config_.timeout_s > 0.0)) throw ConfigError("http backend: timeout must be > 0");
  for (Endpoint e : {Endpoint::kChat, Endpoint::kDetectSegment, Endpoint::kPoint,
                     Endpoint::kSegmentPoints}) {
    if (base_url(e).empty()) {
      throw ConfigError(fmt::format("http backend: no URL for {}", endpoint_path(e)));
    }
  }
}

const std::string& HttpBackend::base_url(Endpoint endpoint) const {
  switch (endpoint) {
    case Endpoint::kChat:
      return config_.chat_url;
    case Endpoint::kDetectSegment:
      return config_.detect_segment_url;
    case Endpoint::kPoint:
      return config_.point_url;
    case Endpoint::kSegmentPoints:
      return config_.segment_points_url;
  }
  return config_.chat_url;
}

std::string HttpBackend::identity() const {
  return fmt::format("http:{}|{}|{}|{}", config_.chat_url, config_.detect_segment_url,
                     config_.point_url, config_.segment_points_url);
}

nlohmann::json HttpBackend::call(Endpoint endpoint, const nlohmann::json& wire,
                                 const nlohmann::json&) {
  const auto [authority, prefix] = split_url(base_url(endpoint));
  const std::string path = prefix + std::string(endpoint_path(endpoint));
  const std::string body = wire.dump();

  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<4096>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  std::vector<std::string> attempts;
  auto backoff = config_.initial_backoff;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    httplib::Client client(authority);
    const auto timeout = std::chrono::duration<double>(config_.timeout_s);
    const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);
    client.set_connection_timeout(sec.count(), usec.count());
    client.set_read_timeout(sec.count(), usec.count());
    client.set_write_timeout(sec.count(), usec.count());
    auto result = client.Post(path, body, "application/json");
    std::string failure;
    if (!result) {
      failure = "transport error: " + httplib::to_string(result.error());
    } else if (result->status >= 500) {
      failure = fmt::format("HTTP {}", result->status);
    } else if (result->status != 200) {
      attempts.push_back(fmt::format("attempt {}: HTTP {}", attempt, result->status));
      throw TransportError(fmt::format("{}{} rejected the request: {}", authority, path,
                                       fmt::join(attempts, "; ")));
    } else {
      try {
        return nlohmann::json::parse(result->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(fmt::format("{}{}: response is not JSON: {}", authority, path,
                                          e.what()));
      }
    }
    attempts.push_back(fmt::format("attempt {}: {}", attempt, failure));
    spdlog::warn("{}{} {}", authority, path, attempts.back());
    if (attempt < config_.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError(fmt::format("{}{} failed after {} attempts: {}", authority, path,
                                   config_.max_attempts, fmt::join(attempts, "; ")));
}

nlohmann::json fixture_to_json(const Fixture& f) {
  return {{"digest", f.digest},
          {"endpoint", endpoint_path(f.endpoint)},
          {"request", f.request},
          {"response", f.response}};
}

void write_fixture(const std::string& directory, const Fixture& fixture) {
  namespace fs = std::filesystem;
  write_file_atomic((fs::path(directory) / (fixture.digest + ".json")).string(),
                    fixture_to_json(fixture).dump(1) + "\n");
}

FixtureBackend::FixtureBackend(const std::string& directory) : directory_(directory) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) {
    throw ConfigError("fixture directory does not exist: " + directory);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::string fingerprint_input;
  for (const auto& path : files) {
    const auto bytes = read_file_bytes(path.string());
    Fixture f;
    try {
      const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
      f.request = j.at("request");
      f.response = j.at("response");
      f.endpoint = endpoint_from_path(j.at("endpoint").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
    f.digest = request_digest(f.request);
    if (path.stem().string() != f.digest) {
      throw ValidationError(path.string() + ": file name does not match request digest " +
                            f.digest);
    }
    try {
      validate_raw_response(f.endpoint, f.response, f.request);
      if (f.endpoint == Endpoint::kSegmentPoints) {
        const BinaryMask mask = rle_decode(parse_segment_points_response(
            f.response, image_size_from_canonical(f.request)).mask);
        for (const auto& p : f.request.at("points")) {
          const PixelCoord pc{p.at(0).get<int>(), p.at(1).get<int>()};
          if (!mask.contains(pc)) {
            throw ValidationError(fmt::format(
                "prompt point ({}, {}) is not covered by the recorded mask", pc.x, pc.y));
          }
        }
      }
    } catch (const Error& e) {
      throw ValidationError(path.string() + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
    fingerprint_input += f.digest + f.response.dump();
    fixtures_.emplace(f.digest, std::move(f));
  }
  fingerprint_ = sha256_hex(fingerprint_input);
}

nlohmann::json FixtureBackend::call(Endpoint endpoint, const nlohmann::json&,
                                    const nlohmann::json& canonical) {
  const std::string digest = request_digest(canonical);
  const auto it = fixtures_.find(digest);
  if (it == fixtures_.end()) {
    throw FixtureMissError(digest, fmt::format("no fixture for {} request {} in {}",
                                               endpoint_path(endpoint), digest, directory_));
  }
  return it->second.response;
}

RecordingBackend::RecordingBackend(std::shared_ptr<ModelBackend> inner, std::string directory)
    : inner_(std::move(inner)), directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

nlohmann::json RecordingBackend::call(Endpoint endpoint, const nlohmann::json& wire,
                                      const nlohmann::json& canonical) {
  nlohmann::json response = inner_->call(endpoint, wire, canonical);
  validate_raw_response(endpoint, response, canonical);
  write_fixture(directory_, {request_digest(canonical), endpoint, canonical, response});
  return response;
}

}  // namespace funcseg
