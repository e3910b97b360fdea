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

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "flowmatch/errors.h"

namespace flowmatch {

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

uint32_t LoadLe32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

void StoreLe32(uint32_t x, std::vector<uint8_t>& out) {
  out.push_back(static_cast<uint8_t>(x));
  out.push_back(static_cast<uint8_t>(x >> 8));
  out.push_back(static_cast<uint8_t>(x >> 16));
  out.push_back(static_cast<uint8_t>(x >> 24));
}

float LoadFloat(const uint8_t* p) { return std::bit_cast<float>(LoadLe32(p)); }

void CheckFinite(float x) {
  if (!std::isfinite(x)) throw InputError("flow contains a non-finite value");
}

// Rounded target coordinate, or -1 when it falls outside [0, limit).
int SplatTarget(int coord, float delta, int limit) {
  const double target = std::round(static_cast<double>(coord) + delta);
  if (target < 0.0 || target >= static_cast<double>(limit)) return -1;
  return static_cast<int>(target);
}

}  // namespace

FlowField::FlowField(int height, int width) : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw InputError("flow dimensions must be positive");
  }
  u_.assign(static_cast<size_t>(height) * width, 0.0f);
  v_.assign(static_cast<size_t>(height) * width, 0.0f);
}

FlowField::FlowField(int height, int width, std::vector<float> u,
                     std::vector<float> v)
    : height_(height), width_(width), u_(std::move(u)), v_(std::move(v)) {
  if (height < 1 || width < 1) {
    throw InputError("flow dimensions must be positive");
  }
  const size_t n = static_cast<size_t>(height) * width;
  if (u_.size() != n || v_.size() != n) {
    throw InputError("flow component size does not match dimensions");
  }
  std::for_each(u_.begin(), u_.end(), CheckFinite);
  std::for_each(v_.begin(), v_.end(), CheckFinite);
}

void FlowField::Set(int row, int col, float u, float v) {
  CheckFinite(u);
  CheckFinite(v);
  u_[Index(row, col)] = u;
  v_[Index(row, col)] = v;
}

bool FlowField::BitwiseEqual(const FlowField& other) const {
  if (height_ != other.height_ || width_ != other.width_) return false;
  const size_t bytes = u_.size() * sizeof(float);
  return std::memcmp(u_.data(), other.u_.data(), bytes) == 0 &&
         std::memcmp(v_.data(), other.v_.data(), bytes) == 0;
}

FlowField ReadFlo(std::span<const uint8_t> bytes) {
  if (bytes.size() < 12) throw InputError(".flo stream shorter than header");
  if (LoadLe32(bytes.data()) != std::bit_cast<uint32_t>(kFloMagic)) {
    throw InputError(".flo magic mismatch");
  }
  const auto width = static_cast<int32_t>(LoadLe32(bytes.data() + 4));
  const auto height = static_cast<int32_t>(LoadLe32(bytes.data() + 8));
  if (width < 1 || height < 1) {
    throw InputError(".flo dimensions must be positive");
  }
  const uint64_t n = static_cast<uint64_t>(width) * height;
  const uint64_t expected = 12 + n * 8;
  if (bytes.size() < expected) throw InputError(".flo payload truncated");
  if (bytes.size() > expected) throw InputError(".flo has trailing bytes");

  std::vector<float> u(n);
  std::vector<float> v(n);
  const uint8_t* p = bytes.data() + 12;
  for (uint64_t i = 0; i < n; ++i, p += 8) {
    u[i] = LoadFloat(p);
    v[i] = LoadFloat(p + 4);
  }
  return FlowField(height, width, std::move(u), std::move(v));
}

std::vector<uint8_t> WriteFlo(const FlowField& flow) {
  const auto u = flow.u_data();
  const auto v = flow.v_data();
  std::vector<uint8_t> out;
  out.reserve(12 + u.size() * 8);
  StoreLe32(std::bit_cast<uint32_t>(kFloMagic), out);
  StoreLe32(static_cast<uint32_t>(flow.width()), out);
  StoreLe32(static_cast<uint32_t>(flow.height()), out);
  for (size_t i = 0; i < u.size(); ++i) {
    StoreLe32(std::bit_cast<uint32_t>(u[i]), out);
    StoreLe32(std::bit_cast<uint32_t>(v[i]), out);
  }
  return out;
}

FlowField ReadFloFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open flow file " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  try {
    return ReadFlo(bytes);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void WriteFloFile(const FlowField& flow, const std::filesystem::path& path) {
  const auto bytes = WriteFlo(flow);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("cannot write flow file " + path.string());
}

std::string FloFileName(int frame_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.flo", frame_index);
  return buf;
}

BitMask WarpMaskForward(const BitMask& mask, const FlowField& flow) {
  if (mask.height() != flow.height() || mask.width() != flow.width()) {
    throw InputError("mask and flow dimensions differ");
  }
  BitMask out(mask.height(), mask.width());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(y, x)) continue;
      const int tx = SplatTarget(x, flow.u(y, x), mask.width());
      const int ty = SplatTarget(y, flow.v(y, x), mask.height());
      if (tx >= 0 && ty >= 0) out.set(ty, tx);
    }
  }
  return out;
}

RleMask WarpRleForward(const RleMask& mask, const FlowField& flow) {
  const int h = mask.height();
  const int w = mask.width();
  if (h != flow.height() || w != flow.width()) {
    throw InputError("mask and flow dimensions differ");
  }
  std::vector<uint32_t> targets;
  targets.reserve(static_cast<size_t>(mask.area()));
  for (uint32_t p : ForegroundIndices(mask)) {
    const int y = static_cast<int>(p % h);
    const int x = static_cast<int>(p / h);
    const int tx = SplatTarget(x, flow.u(y, x), w);
    const int ty = SplatTarget(y, flow.v(y, x), h);
    if (tx >= 0 && ty >= 0) {
      targets.push_back(static_cast<uint32_t>(tx) * h + ty);
    }
  }
  return RleFromIndices(h, w, std::move(targets));
}

BitMask CloseMask(const BitMask& mask) {
  // Work on a grid padded by one pixel so the closing behaves as on an
  // unbounded background plane.
  const int h = mask.height() + 2;
  const int w = mask.width() + 2;
  auto idx = [w](int y, int x) { return static_cast<size_t>(y) * w + x; };
  std::vector<uint8_t> src(static_cast<size_t>(h) * w, 0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) src[idx(y + 1, x + 1)] = mask.at(y, x);
  }
  std::vector<uint8_t> dilated(src.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      uint8_t any = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy;
          const int xx = x + dx;
          if (yy >= 0 && yy < h && xx >= 0 && xx < w) any |= src[idx(yy, xx)];
        }
      }
      dilated[idx(y, x)] = any;
    }
  }
  BitMask closed(mask.height(), mask.width());
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      bool all = true;
      for (int dy = -1; dy <= 1 && all; ++dy) {
        for (int dx = -1; dx <= 1 && all; ++dx) {
          all = dilated[idx(y + dy, x + dx)] != 0;
        }
      }
      closed.set(y - 1, x - 1, all);
    }
  }
  return closed;
}

}  // namespace flowmatch
