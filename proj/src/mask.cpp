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

#include "funcseg/mask.hpp"

#include <algorithm>
#include <numeric>

#include "funcseg/error.hpp"

namespace funcseg {

BinaryMask::BinaryMask(ImageSize size) : size_(size) {
  if (size.width <= 0 || size.height <= 0) throw ContractError("mask: non-positive size");
  data_.assign(static_cast<std::size_t>(size.width) * size.height, 0);
}

std::size_t BinaryMask::area() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

std::vector<PixelCoord> BinaryMask::pixels() const {
  std::vector<PixelCoord> out;
  for (int y = 0; y < size_.height; ++y) {
    for (int x = 0; x < size_.width; ++x) {
      if (at(x, y)) out.push_back({x, y});
    }
  }
  return out;
}

Rle rle_encode(const BinaryMask& mask) {
  Rle rle{mask.size(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int x = 0; x < mask.width(); ++x) {
    for (int y = 0; y < mask.height(); ++y) {
      const std::uint8_t v = mask.at(x, y) ? 1 : 0;
      if (v != current) {
        rle.counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

BinaryMask rle_decode(const Rle& rle) {
  if (rle.size.width <= 0 || rle.size.height <= 0) {
    throw ValidationError("rle: non-positive size");
  }
  const std::uint64_t total =
      std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
  const std::uint64_t expected = static_cast<std::uint64_t>(rle.size.width) * rle.size.height;
  if (total != expected) {
    throw ValidationError("rle: counts sum to " + std::to_string(total) + ", expected " +
                          std::to_string(expected));
  }
  BinaryMask mask(rle.size);
  std::uint64_t pos = 0;
  bool value = false;
  for (std::uint32_t run : rle.counts) {
    if (value) {
      for (std::uint64_t i = pos; i < pos + run; ++i) {
        const int x = static_cast<int>(i / rle.size.height);
        const int y = static_cast<int>(i % rle.size.height);
        mask.set(x, y);
      }
    }
    pos += run;
    value = !value;
  }
  return mask;
}

nlohmann::json rle_to_json(const Rle& rle) {
  return {{"size", {rle.size.height, rle.size.width}}, {"counts", rle.counts}};
}

Rle rle_from_json(const nlohmann::json& j) {
  try {
    const auto& size = j.at("size");
    if (!size.is_array() || size.size() != 2) throw ValidationError("rle: size must be [h, w]");
    Rle rle;
    rle.size = {size[1].get<int>(), size[0].get<int>()};
    const auto& counts = j.at("counts");
    if (!counts.is_array()) throw ValidationError("rle: counts must be an integer array");
    for (const auto& c : counts) {
      if (!c.is_number_unsigned() && !(c.is_number_integer() && c.get<std::int64_t>() >= 0)) {
        throw ValidationError("rle: counts must be non-negative integers");
      }
      rle.counts.push_back(c.get<std::uint32_t>());
    }
    return rle;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("rle: ") + e.what());
  }
}

BinaryMask resample_nearest(const BinaryMask& mask, ImageSize target) {
  if (mask.size() == target) return mask;
  BinaryMask out(target);
  for (int y = 0; y < target.height; ++y) {
    const int sy = std::min(mask.height() - 1,
                            static_cast<int>((y + 0.5) * mask.height() / target.height));
    for (int x = 0; x < target.width; ++x) {
      const int sx = std::min(mask.width() - 1,
                              static_cast<int>((x + 0.5) * mask.width() / target.width));
      if (mask.at(sx, sy)) out.set(x, y);
    }
  }
  return out;
}

}  // namespace funcseg
