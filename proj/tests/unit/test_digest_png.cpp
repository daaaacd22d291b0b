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

#include <filesystem>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "funcseg/digest.hpp"
#include "funcseg/error.hpp"
#include "funcseg/png_io.hpp"

namespace funcseg {
namespace {

std::span<const std::uint8_t> bytes_of(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

TEST(Digest, Sha256KnownVectors) {
  // FIPS 180-2 examples.
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(bytes_of("abc")), sha256_hex("abc"));
}

TEST(Digest, Base64KnownVectors) {
  // RFC 4648 section 10.
  const std::pair<const char*, const char*> cases[] = {
      {"", ""},         {"f", "Zg=="},         {"fo", "Zm8="},         {"foo", "Zm9v"},
      {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"}};
  for (const auto& [plain, encoded] : cases) {
    EXPECT_EQ(base64_encode(bytes_of(plain)), encoded);
    const auto decoded = base64_decode(encoded);
    EXPECT_EQ(std::string(decoded.begin(), decoded.end()), plain);
  }
}

TEST(Digest, Base64RejectsGarbage) {
  EXPECT_THROW(base64_decode("Zm9!"), ParseError);
  EXPECT_THROW(base64_decode("Zm9"), ParseError);
}

TEST(Digest, Base64RoundTripsRandomBytes) {
  std::mt19937 rng(7);
  for (int n = 0; n < 200; ++n) {
    std::vector<std::uint8_t> data(static_cast<std::size_t>(n));
    for (auto& b : data) b = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(base64_decode(base64_encode(data)), data);
  }
}

TEST(Digest, AtomicWriteThenRead) {
  const auto dir = std::filesystem::temp_directory_path() / "funcseg_digest_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "a.txt").string();
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  const auto back = read_file_bytes(path);
  EXPECT_EQ(std::string(back.begin(), back.end()), "second");
  EXPECT_THROW(read_file_bytes((dir / "missing").string()), Error);
  std::filesystem::remove_all(dir);
}

TEST(Png, Gray16RoundTrip) {
  Gray16Image img{{7, 3}, {}};
  for (int i = 0; i < 21; ++i) img.pixels.push_back(static_cast<std::uint16_t>(i * 3000 + 1));
  const auto png = encode_png_gray16(img);
  EXPECT_EQ(png_size(png), (ImageSize{7, 3}));
  const auto back = decode_png_gray16(png);
  EXPECT_EQ(back.size, img.size);
  EXPECT_EQ(back.pixels, img.pixels);
}

TEST(Png, Rgb8RoundTrip) {
  Rgb8Image img{{4, 5}, {}};
  for (int i = 0; i < 60; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 4));
  const auto back = decode_png_rgb8(encode_png_rgb8(img));
  EXPECT_EQ(back.size, img.size);
  EXPECT_EQ(back.pixels, img.pixels);
}

TEST(Png, ChannelMismatchAndCorruptInputAreRejected) {
  Rgb8Image rgb{{2, 2}, std::vector<std::uint8_t>(12, 9)};
  EXPECT_THROW(decode_png_gray16(encode_png_rgb8(rgb)), ParseError);
  std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_THROW(decode_png_rgb8(junk), ParseError);
  auto truncated = encode_png_rgb8(rgb);
  truncated.resize(truncated.size() / 2);
  EXPECT_THROW(decode_png_rgb8(truncated), ParseError);
}

}  // namespace
}  // namespace funcseg
