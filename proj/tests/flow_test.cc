// Copyright 2026 The Flowmatch Authors.
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

#include "flowmatch/flow.h"

#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "flowmatch/errors.h"
#include "test_util.h"

namespace flowmatch {
namespace {

using testing::BruteSplat;
using testing::RandomMask;
using testing::UniformFlow;

FlowField RandomFlow(std::mt19937_64& rng, int h, int w, float scale) {
  std::uniform_real_distribution<float> d(-scale, scale);
  FlowField f(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) f.Set(r, c, d(rng), d(rng));
  }
  return f;
}

TEST(FloTest, SmallestFileIsTwentyBytes) {
  const auto bytes = WriteFlo(FlowField(1, 1));
  ASSERT_EQ(bytes.size(), 20u);
  // 202021.25f is 0x48495450, "PIEH" on disk.
  EXPECT_EQ(std::memcmp(bytes.data(), "PIEH", 4), 0);
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 1);
  EXPECT_TRUE(ReadFlo(bytes).BitwiseEqual(FlowField(1, 1)));
}

TEST(FloTest, SizeFormula) {
  EXPECT_EQ(WriteFlo(FlowField(2, 2)).size(), 4u + 4u + 4u + 32u);
}

TEST(FloTest, HeaderStoresWidthBeforeHeight) {
  const auto bytes = WriteFlo(FlowField(3, 5));
  EXPECT_EQ(bytes[4], 5);
  EXPECT_EQ(bytes[8], 3);
  const FlowField back = ReadFlo(bytes);
  EXPECT_EQ(back.height(), 3);
  EXPECT_EQ(back.width(), 5);
}

TEST(FloTest, WrongMagic) {
  auto bytes = WriteFlo(FlowField(1, 1));
  const auto one = std::bit_cast<uint32_t>(1.0f);
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<uint8_t>(one >> (8 * i));
  EXPECT_THROW(ReadFlo(bytes), InputError);
}

TEST(FloTest, NonPositiveDimensions) {
  auto bytes = WriteFlo(FlowField(1, 1));
  bytes[4] = 0;
  EXPECT_THROW(ReadFlo(bytes), InputError);
  bytes = WriteFlo(FlowField(1, 1));
  bytes[8] = 0xff;
  bytes[9] = 0xff;
  bytes[10] = 0xff;
  bytes[11] = 0xff;
  EXPECT_THROW(ReadFlo(bytes), InputError);
}

TEST(FloTest, TruncatedAndTrailing) {
  auto bytes = WriteFlo(FlowField(2, 2));
  auto shorter = bytes;
  shorter.pop_back();
  EXPECT_THROW(ReadFlo(shorter), InputError);
  EXPECT_THROW(ReadFlo(std::span(bytes.data(), 8)), InputError);
  bytes.push_back(0);
  EXPECT_THROW(ReadFlo(bytes), InputError);
}

TEST(FloTest, NonFiniteValues) {
  auto bytes = WriteFlo(FlowField(1, 1));
  const auto nan = std::bit_cast<uint32_t>(std::numeric_limits<float>::quiet_NaN());
  for (int i = 0; i < 4; ++i) bytes[12 + i] = static_cast<uint8_t>(nan >> (8 * i));
  EXPECT_THROW(ReadFlo(bytes), InputError);
  FlowField f(1, 1);
  EXPECT_THROW(f.Set(0, 0, std::numeric_limits<float>::infinity(), 0.0f),
               InputError);
}

TEST(FloTest, RandomFieldRoundTripIsBitIdentical) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const FlowField f = RandomFlow(rng, 6, 8, 50.0f);
    const FlowField back = ReadFlo(WriteFlo(f));
    ASSERT_TRUE(back.BitwiseEqual(f));
    ASSERT_EQ(WriteFlo(back), WriteFlo(f));
  }
}

TEST(FloTest, FileRoundTrip) {
  std::mt19937_64 rng(12);
  const FlowField f = RandomFlow(rng, 4, 7, 3.0f);
  const auto path = std::filesystem::temp_directory_path() / "flowmatch_test.flo";
  WriteFloFile(f, path);
  EXPECT_TRUE(ReadFloFile(path).BitwiseEqual(f));
  std::filesystem::remove(path);
  EXPECT_THROW(ReadFloFile(path), InputError);
  EXPECT_EQ(FloFileName(12), "000012.flo");
}

TEST(WarpTest, ZeroFlowIsIdentity) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    const BitMask m = RandomMask(rng, 12, 15);
    const FlowField zero(12, 15);
    ASSERT_EQ(WarpMaskForward(m, zero), m);
    ASSERT_EQ(WarpRleForward(EncodeRle(m), zero), EncodeRle(m));
  }
}

TEST(WarpTest, IntegerTranslationOfSinglePixel) {
  BitMask m(3, 3);
  m.set(1, 1);
  const BitMask out = WarpMaskForward(m, UniformFlow(3, 3, 1.0f, 0.0f));
  EXPECT_EQ(out.area(), 1);
  EXPECT_TRUE(out.at(1, 2));  // x moved from 1 to 2
}

TEST(WarpTest, EverythingLeavesTheFrame) {
  const BitMask full = testing::Rect(4, 4, 0, 0, 4, 4);
  const FlowField f = UniformFlow(4, 4, 10.0f, 0.0f);
  ASSERT_EQ(BruteSplat(full, f).area(), 0);
  EXPECT_EQ(WarpMaskForward(full, f).area(), 0);
  EXPECT_EQ(WarpRleForward(EncodeRle(full), f).area(), 0);
}

TEST(WarpTest, HalvesRoundAwayFromZero) {
  BitMask m(1, 5);
  m.set(0, 1);
  // 1 + 0.5 = 1.5 -> 2
  EXPECT_TRUE(WarpMaskForward(m, UniformFlow(1, 5, 0.5f, 0.0f)).at(0, 2));
  // 1 + 1.5 = 2.5 -> 3
  EXPECT_TRUE(WarpMaskForward(m, UniformFlow(1, 5, 1.5f, 0.0f)).at(0, 3));
  // 1 - 0.5 = 0.5 -> 1
  EXPECT_TRUE(WarpMaskForward(m, UniformFlow(1, 5, -0.5f, 0.0f)).at(0, 1));
  // 1 - 1.5 = -0.5 -> -1, off the image
  EXPECT_EQ(WarpMaskForward(m, UniformFlow(1, 5, -1.5f, 0.0f)).area(), 0);
  // 1 + 0.49 -> 1
  EXPECT_TRUE(WarpMaskForward(m, UniformFlow(1, 5, 0.49f, 0.0f)).at(0, 1));

  BitMask col(5, 1);
  col.set(2, 0);
  // Vertical: 2 + 1.5 = 3.5 -> 4
  EXPECT_TRUE(WarpMaskForward(col, UniformFlow(5, 1, 0.0f, 1.5f)).at(4, 0));
}

TEST(WarpTest, CollisionsSetTargetOnce) {
  BitMask m(1, 4);
  m.set(0, 0);
  m.set(0, 1);
  FlowField f(1, 4);
  f.Set(0, 0, 2.0f, 0.0f);
  f.Set(0, 1, 1.0f, 0.0f);
  const BitMask out = WarpMaskForward(m, f);
  EXPECT_EQ(out.area(), 1);
  EXPECT_TRUE(out.at(0, 2));
}

TEST(WarpTest, DimensionMismatch) {
  EXPECT_THROW(WarpMaskForward(BitMask(3, 3), FlowField(3, 4)), InputError);
  EXPECT_THROW(WarpRleForward(RleMask::Empty(3, 3), FlowField(4, 3)),
               InputError);
}

TEST(WarpTest, AreaNeverIncreasesAndPathsAgree) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 300; ++i) {
    const BitMask m = RandomMask(rng, 16, 20);
    const FlowField f = RandomFlow(rng, 16, 20, 4.0f);
    const BitMask dense = WarpMaskForward(m, f);
    ASSERT_LE(dense.area(), m.area());
    ASSERT_EQ(dense, BruteSplat(m, f));
    ASSERT_EQ(WarpRleForward(EncodeRle(m), f), EncodeRle(dense));
  }
}

TEST(WarpTest, IntegerTranslationEquivariance) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> shift(-3, 3);
  for (int i = 0; i < 100; ++i) {
    const int du = shift(rng);
    const int dv = shift(rng);
    // Foreground confined to the interior so the shift stays in-bounds.
    BitMask m(20, 20);
    const BitMask inner = RandomMask(rng, 14, 14, 0.2);
    for (int r = 0; r < 14; ++r) {
      for (int c = 0; c < 14; ++c) m.set(r + 3, c + 3, inner.at(r, c));
    }
    BitMask shifted(20, 20);
    for (int r = 0; r < 20; ++r) {
      for (int c = 0; c < 20; ++c) {
        if (m.at(r, c)) shifted.set(r + dv, c + du);
      }
    }
    const FlowField f = UniformFlow(20, 20, static_cast<float>(du),
                                    static_cast<float>(dv));
    ASSERT_EQ(WarpMaskForward(m, f), shifted);
    ASSERT_EQ(BruteSplat(m, f), shifted);
  }
}

TEST(CloseMaskTest, FillsSinglePixelHoleAndContainsInput) {
  BitMask m = testing::Rect(7, 7, 1, 1, 5, 5);
  m.set(3, 3, false);
  const BitMask closed = CloseMask(m);
  EXPECT_TRUE(closed.at(3, 3));
  EXPECT_EQ(closed, testing::Rect(7, 7, 1, 1, 5, 5));

  std::mt19937_64 rng(51);
  for (int i = 0; i < 50; ++i) {
    const BitMask r = RandomMask(rng, 10, 10, 0.3);
    const BitMask c = CloseMask(r);
    for (int y = 0; y < 10; ++y) {
      for (int x = 0; x < 10; ++x) {
        if (r.at(y, x)) ASSERT_TRUE(c.at(y, x));
      }
    }
  }
}

}  // namespace
}  // namespace flowmatch
