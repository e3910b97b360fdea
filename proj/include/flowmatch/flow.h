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

// Dense optical flow fields, Middlebury `.flo` I/O and forward mask warping.

#ifndef FLOWMATCH_FLOW_H_
#define FLOWMATCH_FLOW_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flowmatch/mask.h"

namespace flowmatch {

// Per-pixel displacement (u: columns, v: rows) from frame t to frame t+1.
// Components are stored row-major as 32-bit floats, matching `.flo`.
class FlowField {
 public:
  // Zero flow. Throws InputError on non-positive dimensions.
  FlowField(int height, int width);
  // Throws InputError if either component has the wrong size or a
  // non-finite entry.
  FlowField(int height, int width, std::vector<float> u, std::vector<float> v);

  int height() const { return height_; }
  int width() const { return width_; }

  float u(int row, int col) const { return u_[Index(row, col)]; }
  float v(int row, int col) const { return v_[Index(row, col)]; }
  // Throws InputError on a non-finite value.
  void Set(int row, int col, float u, float v);

  std::span<const float> u_data() const { return u_; }
  std::span<const float> v_data() const { return v_; }

  // Bitwise comparison, so that round trips can be checked exactly.
  bool BitwiseEqual(const FlowField& other) const;

 private:
  size_t Index(int row, int col) const {
    return static_cast<size_t>(row) * width_ + col;
  }

  int height_;
  int width_;
  std::vector<float> u_;
  std::vector<float> v_;
};

inline constexpr float kFloMagic = 202021.25f;

// Parses a little-endian `.flo` stream: float magic, int32 width, int32
// height, then interleaved (u, v) float pairs row by row. Throws InputError
// on a wrong magic, non-positive dimensions, a truncated payload, trailing
// bytes or non-finite values.
FlowField ReadFlo(std::span<const uint8_t> bytes);
std::vector<uint8_t> WriteFlo(const FlowField& flow);

FlowField ReadFloFile(const std::filesystem::path& path);
void WriteFloFile(const FlowField& flow, const std::filesystem::path& path);

// `<index:06d>.flo`
std::string FloFileName(int frame_index);

// Forward splat: each foreground pixel (x, y) moves to
// (round(x + u), round(y + v)) with halves rounded away from zero. Targets
// outside the image are dropped and collisions set the target once.
BitMask WarpMaskForward(const BitMask& mask, const FlowField& flow);

// Same warp evaluated on the runs; only foreground pixels are visited.
RleMask WarpRleForward(const RleMask& mask, const FlowField& flow);

// One 3x3 closing pass (dilate, then erode), used for optional hole filling
// after warping. Computed as if the image continued as background beyond its
// border, so the result always contains the input.
BitMask CloseMask(const BitMask& mask);

}  // namespace flowmatch

#endif  // FLOWMATCH_FLOW_H_
