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

#include "funcseg/png_io.hpp"

#include <png.h>

#include <cstring>
#include <memory>

#include "funcseg/error.hpp"

namespace funcseg {
namespace {

struct ReadCursor {
  std::span<const std::uint8_t> data;
  std::size_t offset = 0;
};

void read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->data.size()) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, cursor->data.data() + cursor->offset, length);
  cursor->offset += length;
}

void write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_callback(png_structp) {}

[[noreturn]] void error_callback(png_structp png, png_const_charp message) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text != nullptr) *text = message;
  png_longjmp(png, 1);
}

void warning_callback(png_structp, png_const_charp) {}

struct DecodedPng {
  ImageSize size;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<std::uint8_t> rows;  // raw row bytes as libpng delivers them
  std::size_t row_bytes = 0;
};

DecodedPng decode(std::span<const std::uint8_t> bytes, bool header_only) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw ParseError("not a PNG image");
  }
  std::string message;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, error_callback, warning_callback);
  if (png == nullptr) throw Error("png: cannot allocate read struct");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png: cannot allocate info struct");
  }
  ReadCursor cursor{bytes, 0};
  DecodedPng result;
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("png: " + message);
  }
  png_set_read_fn(png, &cursor, read_callback);
  png_read_info(png, info);
  result.size = {static_cast<int>(png_get_image_width(png, info)),
                 static_cast<int>(png_get_image_height(png, info))};
  result.bit_depth = png_get_bit_depth(png, info);
  result.color_type = png_get_color_type(png, info);
  if (!header_only) {
    if (result.bit_depth == 16) png_set_swap(png);  // host little-endian samples
    png_read_update_info(png, info);
    result.row_bytes = png_get_rowbytes(png, info);
    result.rows.resize(result.row_bytes * static_cast<std::size_t>(result.size.height));
    row_ptrs.resize(static_cast<std::size_t>(result.size.height));
    for (std::size_t y = 0; y < row_ptrs.size(); ++y) {
      row_ptrs[y] = result.rows.data() + y * result.row_bytes;
    }
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return result;
}

std::vector<std::uint8_t> encode(ImageSize size, int bit_depth, int color_type,
                                 const std::uint8_t* data, std::size_t row_bytes) {
  if (size.width <= 0 || size.height <= 0) throw ContractError("png: empty image");
  std::string message;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, error_callback, warning_callback);
  if (png == nullptr) throw Error("png: cannot allocate write struct");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png: cannot allocate info struct");
  }
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(size.height));
  for (std::size_t y = 0; y < row_ptrs.size(); ++y) {
    row_ptrs[y] = const_cast<png_bytep>(data + y * row_bytes);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("png: " + message);
  }
  png_set_write_fn(png, &out, write_callback, flush_callback);
  png_set_IHDR(png, info, static_cast<png_uint_32>(size.width),
               static_cast<png_uint_32>(size.height), bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace

ImageSize png_size(std::span<const std::uint8_t> png) { return decode(png, true).size; }

Gray16Image decode_png_gray16(std::span<const std::uint8_t> png) {
  DecodedPng d = decode(png, false);
  if (d.bit_depth != 16 || d.color_type != PNG_COLOR_TYPE_GRAY) {
    throw ParseError("png: expected 16-bit single-channel image");
  }
  Gray16Image image{d.size, {}};
  image.pixels.resize(static_cast<std::size_t>(d.size.width) * d.size.height);
  for (int y = 0; y < d.size.height; ++y) {
    std::memcpy(image.pixels.data() + static_cast<std::size_t>(y) * d.size.width,
                d.rows.data() + static_cast<std::size_t>(y) * d.row_bytes,
                static_cast<std::size_t>(d.size.width) * 2);
  }
  return image;
}

Rgb8Image decode_png_rgb8(std::span<const std::uint8_t> png) {
  DecodedPng d = decode(png, false);
  if (d.bit_depth != 8 || d.color_type != PNG_COLOR_TYPE_RGB) {
    throw ParseError("png: expected 8-bit RGB image");
  }
  Rgb8Image image{d.size, {}};
  const std::size_t stride = static_cast<std::size_t>(d.size.width) * 3;
  image.pixels.resize(stride * d.size.height);
  for (int y = 0; y < d.size.height; ++y) {
    std::memcpy(image.pixels.data() + y * stride, d.rows.data() + y * d.row_bytes, stride);
  }
  return image;
}

std::vector<std::uint8_t> encode_png_gray16(const Gray16Image& image) {
  if (image.pixels.size() != static_cast<std::size_t>(image.size.width) * image.size.height) {
    throw ContractError("png: pixel buffer does not match image size");
  }
  return encode(image.size, 16, PNG_COLOR_TYPE_GRAY,
                reinterpret_cast<const std::uint8_t*>(image.pixels.data()),
                static_cast<std::size_t>(image.size.width) * 2);
}

std::vector<std::uint8_t> encode_png_rgb8(const Rgb8Image& image) {
  if (image.pixels.size() != static_cast<std::size_t>(image.size.width) * image.size.height * 3) {
    throw ContractError("png: pixel buffer does not match image size");
  }
  return encode(image.size, 8, PNG_COLOR_TYPE_RGB, image.pixels.data(),
                static_cast<std::size_t>(image.size.width) * 3);
}

}  // namespace funcseg
