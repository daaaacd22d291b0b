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
#include <span>
#include <string>
#include <vector>

namespace funcseg {

struct ImageSize {
  int width = 0;
  int height = 0;
  bool operator==(const ImageSize&) const = default;
};

/// Single-channel 16-bit image, row-major.
struct Gray16Image {
  ImageSize size;
  std::vector<std::uint16_t> pixels;
};

/// 8-bit RGB image, row-major, interleaved.
struct Rgb8Image {
  ImageSize size;
  std::vector<std::uint8_t> pixels;
};

/// Reads only the IHDR chunk. Throws ParseError if the bytes are not a PNG.
ImageSize png_size(std::span<const std::uint8_t> png);

/// Decodes a 16-bit single-channel PNG; any other format is a ParseError.
Gray16Image decode_png_gray16(std::span<const std::uint8_t> png);
Rgb8Image decode_png_rgb8(std::span<const std::uint8_t> png);

std::vector<std::uint8_t> encode_png_gray16(const Gray16Image& image);
std::vector<std::uint8_t> encode_png_rgb8(const Rgb8Image& image);

}  // namespace funcseg
