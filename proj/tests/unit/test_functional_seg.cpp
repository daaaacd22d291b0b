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

#include <gtest/gtest.h>

#include "funcseg/digest.hpp"
#include "funcseg/error.hpp"
#include "funcseg/functional_seg.hpp"
#include "funcseg/png_io.hpp"
#include "scripted_backend.hpp"
#include "temp_dir.hpp"

namespace funcseg {
namespace {

TEST(PointQuery, BothModes) {
  EXPECT_EQ(build_point_query("handle", "open the bottom drawer"),
            "Point to all the handle in order to open the bottom drawer");
  EXPECT_EQ(build_point_query("handle", "open the bottom drawer", QueryMode::kObjectOnly),
            "Point to all the handle.");
  EXPECT_THROW(build_point_query("", "x"), ContractError);
  EXPECT_THROW(build_point_query("handle", ""), ContractError);
  EXPECT_EQ(query_mode_from_string(to_string(QueryMode::kObjectOnly)), QueryMode::kObjectOnly);
  EXPECT_EQ(query_mode_from_string("with_description"), QueryMode::kWithDescription);
  EXPECT_THROW(query_mode_from_string("both"), ConfigError);
}

TEST(Denormalize, RoundsAndClamps) {
  const ImageSize img{8, 4};
  EXPECT_EQ(denormalize({0.5, 0.5}, img), (PixelCoord{4, 2}));
  EXPECT_EQ(denormalize({0.0, 0.0}, img), (PixelCoord{0, 0}));
  EXPECT_EQ(denormalize({1.0, 1.0}, img), (PixelCoord{7, 3}));
  EXPECT_EQ(denormalize({0.1875, 0.125}, img), (PixelCoord{2, 1}));  // 1.5 and 0.5 round up
}

class SegmentFunctional : public ::testing::Test {
 protected:
  void SetUp() override {
    view_.view_id = "v0";
    view_.color_path = dir_.str("v0.png");
    view_.color_size = {8, 4};
    view_.intrinsics = {8, 8, 3.5, 1.5, 8, 4, 2};
    view_.depth = {{4, 2}, std::vector<double>(8, 1.0)};
    const auto png = encode_png_rgb8({{8, 4}, std::vector<std::uint8_t>(8 * 4 * 3, 9)});
    write_file_atomic(view_.color_path,
                      std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
  }
  testing::TempDir dir_;
  View view_;
  testing::ScriptedBackend backend_;
};

TEST_F(SegmentFunctional, NothingPointedSkipsSegmentation) {
  backend_.push(Endpoint::kPoint, {{"points", nlohmann::json::array()}});
  EXPECT_FALSE(segment_functional(view_, "Point to all the knob.", backend_).has_value());
  ASSERT_EQ(backend_.requests.size(), 1u);
  EXPECT_EQ(backend_.requests[0].wire.at("query"), "Point to all the knob.");
}

TEST_F(SegmentFunctional, AllPointsGoToOneSegmentCallAndMaskIsResampled) {
  backend_.push(Endpoint::kPoint, {{"points", {{{"x", 0.25}, {"y", 0.5}}, {{"x", 1.0}, {"y", 0.0}}}}});
  BinaryMask colour_mask({8, 4});
  colour_mask.set(2, 2);
  colour_mask.set(3, 2);
  colour_mask.set(2, 3);
  colour_mask.set(3, 3);
  colour_mask.set(7, 1);  // depth pixel (x, y) samples colour pixel (2x+1, 2y+1)
  backend_.push(Endpoint::kSegmentPoints, {{"mask", rle_to_json(rle_encode(colour_mask))}});

  const auto got = segment_functional(view_, "q", backend_);
  ASSERT_TRUE(got.has_value());
  ASSERT_EQ(backend_.requests.size(), 2u);
  EXPECT_EQ(backend_.requests[1].endpoint, Endpoint::kSegmentPoints);
  EXPECT_EQ(backend_.requests[1].wire.at("points"), nlohmann::json::parse("[[2, 2], [7, 0]]"));
  EXPECT_EQ(got->source_points, (std::vector<PixelCoord>{{2, 2}, {7, 0}}));
  EXPECT_EQ(got->mask.size(), (ImageSize{4, 2}));
  EXPECT_EQ(got->mask.pixels(), (std::vector<PixelCoord>{{3, 0}, {1, 1}}));
  const auto back = functional_mask_from_json(to_json(*got));
  EXPECT_EQ(back.mask, got->mask);
  EXPECT_EQ(back.source_points, got->source_points);
}

TEST_F(SegmentFunctional, WrongSizedMaskRejected) {
  backend_.push(Endpoint::kPoint, {{"points", {{{"x", 0.5}, {"y", 0.5}}}}});
  backend_.push(Endpoint::kSegmentPoints, {{"mask", rle_to_json(rle_encode(BinaryMask({4, 2})))}});
  EXPECT_THROW(segment_functional(view_, "q", backend_), ValidationError);
}

TEST_F(SegmentFunctional, OutOfRangePointRejected) {
  backend_.push(Endpoint::kPoint, {{"points", {{{"x", 1.5}, {"y", 0.5}}}}});
  EXPECT_THROW(segment_functional(view_, "q", backend_), ValidationError);
}

}  // namespace
}  // namespace funcseg
