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

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "funcseg/png_io.hpp"

namespace funcseg {

struct PixelCoord {
  int x = 0;
  int y = 0;
  bool operator==(const PixelCoord&) const = default;
  auto operator<=>(const PixelCoord&) const = default;
};

/// Dense binary mask, row-major, one byte per pixel (0 or 1).
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(ImageSize size);

  ImageSize size() const { return size_; }
  int width() const { return size_.width; }
  int height() const { return size_.height; }

  bool at(int x, int y) const { return data_[index(x, y)] != 0; }
  void set(int x, int y, bool value = true) { data_[index(x, y)] = value ? 1 : 0; }
  bool contains(PixelCoord p) const {
    return p.x >= 0 && p.y >= 0 && p.x < size_.width && p.y < size_.height && at(p.x, p.y);
  }

  std::size_t area() const;
  bool empty() const { return area() == 0; }
  /// Foreground pixels in row-major order.
  std::vector<PixelCoord> pixels() const;

  const std::vector<std::uint8_t>& data() const { return data_; }
  bool operator==(const BinaryMask&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * size_.width + static_cast<std::size_t>(x);
  }

  ImageSize size_;
  std::vector<std::uint8_t> data_;
};

/// COCO-style run-length encoding: alternating runs of 0s and 1s over the
/// column-major pixel order, always starting with a (possibly empty) 0-run.
struct Rle {
  ImageSize size;
  std::vector<std::uint32_t> counts;
  bool operator==(const Rle&) const = default;
};

Rle rle_encode(const BinaryMask& mask);
/// Throws ValidationError when the counts do not sum to width*height.
BinaryMask rle_decode(const Rle& rle);

/// Wire form: {"size": [height, width], "counts": [...]}.
nlohmann::json rle_to_json(const Rle& rle);
Rle rle_from_json(const nlohmann::json& j);

/// Nearest-neighbour resampling that samples each target pixel centre.
BinaryMask resample_nearest(const BinaryMask& mask, ImageSize target);

}  // namespace funcseg
