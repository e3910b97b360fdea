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

#include "flowmatch/mask.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "flowmatch/errors.h"

namespace flowmatch {

namespace {

void CheckDims(int height, int width) {
  if (height < 1 || width < 1) {
    throw InputError("mask dimensions must be positive, got " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
}

void CheckSameDims(int ha, int wa, int hb, int wb) {
  if (ha != hb || wa != wb) {
    throw InputError("mask dimension mismatch: " + std::to_string(ha) + "x" +
                     std::to_string(wa) + " vs " + std::to_string(hb) + "x" +
                     std::to_string(wb));
  }
}

// Drops zero-length runs after the first, merging their neighbours, and
// removes a trailing zero run.
std::vector<uint32_t> Canonicalize(std::vector<uint32_t> runs) {
  std::vector<uint32_t> out;
  out.reserve(runs.size());
  for (size_t i = 0; i < runs.size(); ++i) {
    const uint32_t r = runs[i];
    if (i == 0) {
      out.push_back(r);
      continue;
    }
    if (r == 0) {
      // (a, 0, b) collapses to (a + b).
      if (i + 1 < runs.size()) {
        out.back() += runs[i + 1];
        ++i;
      }
      continue;
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace

BitMask::BitMask(int height, int width) : height_(height), width_(width) {
  CheckDims(height, width);
  bits_.assign(static_cast<size_t>(height) * width, 0);
}

int64_t BitMask::area() const {
  return std::count(bits_.begin(), bits_.end(), uint8_t{1});
}

RleMask::RleMask(int height, int width, std::vector<uint32_t> runs)
    : height_(height), width_(width) {
  CheckDims(height, width);
  const uint64_t total_pixels = static_cast<uint64_t>(height) * width;
  uint64_t total = 0;
  for (uint32_t r : runs) total += r;
  if (total != total_pixels) {
    throw InputError("run lengths sum to " + std::to_string(total) +
                     ", expected " + std::to_string(total_pixels));
  }
  runs_ = Canonicalize(std::move(runs));

  uint64_t pos = 0;
  for (size_t i = 0; i < runs_.size(); ++i) {
    const uint64_t len = runs_[i];
    if (i % 2 == 1 && len > 0) {
      area_ += static_cast<int64_t>(len);
      const int first_col = static_cast<int>(pos / height_);
      const int last_col = static_cast<int>((pos + len - 1) / height_);
      int row_lo = static_cast<int>(pos % height_);
      int row_hi = static_cast<int>((pos + len - 1) % height_);
      if (first_col != last_col) {
        row_lo = 0;
        row_hi = height_ - 1;
      }
      if (bbox_.empty) {
        bbox_ = {false, row_lo, row_hi, first_col, last_col};
      } else {
        bbox_.row_min = std::min(bbox_.row_min, row_lo);
        bbox_.row_max = std::max(bbox_.row_max, row_hi);
        bbox_.col_min = std::min(bbox_.col_min, first_col);
        bbox_.col_max = std::max(bbox_.col_max, last_col);
      }
    }
    pos += len;
  }
}

RleMask RleMask::FromString(int height, int width, std::string_view counts) {
  return RleMask(height, width, DecompressCounts(counts));
}

RleMask RleMask::Empty(int height, int width) {
  CheckDims(height, width);
  return RleMask(height, width,
                 {static_cast<uint32_t>(static_cast<uint64_t>(height) * width)});
}

std::string RleMask::ToString() const { return CompressCounts(runs_); }

std::string CompressCounts(std::span<const uint32_t> runs) {
  std::string out;
  out.reserve(runs.size() * 2);
  for (size_t i = 0; i < runs.size(); ++i) {
    int64_t x = runs[i];
    if (i > 2) x -= static_cast<int64_t>(runs[i - 2]);
    bool more = true;
    while (more) {
      int c = static_cast<int>(x & 0x1f);
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      out.push_back(static_cast<char>(c + 48));
    }
  }
  return out;
}

std::vector<uint32_t> DecompressCounts(std::string_view counts) {
  std::vector<uint32_t> runs;
  size_t p = 0;
  while (p < counts.size()) {
    int64_t x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= counts.size()) {
        throw InputError("truncated continuation chain in RLE counts");
      }
      const int c = static_cast<unsigned char>(counts[p]) - 48;
      if (c < 0 || c > 63) {
        throw InputError(std::string("invalid RLE counts character '") +
                         counts[p] + "' at offset " + std::to_string(p));
      }
      // A 33-bit signed delta never needs more than 7 groups.
      if (k >= 12) throw InputError("RLE counts value too long");
      x |= static_cast<int64_t>(c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= ~((int64_t{1} << (5 * k)) - 1);
    }
    if (runs.size() > 2) x += static_cast<int64_t>(runs[runs.size() - 2]);
    if (x < 0 || x > std::numeric_limits<uint32_t>::max()) {
      throw InputError("RLE counts decode to out-of-range run " +
                       std::to_string(x));
    }
    runs.push_back(static_cast<uint32_t>(x));
  }
  return runs;
}

BitMask DecodeRle(const RleMask& rle) {
  BitMask mask(rle.height(), rle.width());
  const int h = rle.height();
  uint64_t pos = 0;
  const auto& runs = rle.runs();
  for (size_t i = 0; i < runs.size(); ++i) {
    if (i % 2 == 1) {
      for (uint64_t p = pos; p < pos + runs[i]; ++p) {
        mask.set(static_cast<int>(p % h), static_cast<int>(p / h));
      }
    }
    pos += runs[i];
  }
  return mask;
}

std::vector<uint32_t> ForegroundIndices(const RleMask& rle) {
  std::vector<uint32_t> out;
  out.reserve(static_cast<size_t>(rle.area()));
  const auto& runs = rle.runs();
  uint32_t pos = 0;
  for (size_t i = 0; i < runs.size(); ++i) {
    if (i % 2 == 1) {
      for (uint32_t p = pos; p < pos + runs[i]; ++p) out.push_back(p);
    }
    pos += runs[i];
  }
  return out;
}

RleMask RleFromIndices(int height, int width, std::vector<uint32_t> indices) {
  CheckDims(height, width);
  const auto total = static_cast<uint32_t>(static_cast<uint64_t>(height) * width);
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  if (!indices.empty() && indices.back() >= total) {
    throw InputError("pixel index outside the mask");
  }
  std::vector<uint32_t> runs;
  uint32_t cursor = 0;
  size_t i = 0;
  while (i < indices.size()) {
    size_t j = i + 1;
    while (j < indices.size() && indices[j] == indices[j - 1] + 1) ++j;
    runs.push_back(indices[i] - cursor);
    runs.push_back(static_cast<uint32_t>(j - i));
    cursor = indices[j - 1] + 1;
    i = j;
  }
  if (cursor < total || runs.empty()) runs.push_back(total - cursor);
  return RleMask(height, width, std::move(runs));
}

RleMask EncodeRle(const BitMask& mask) {
  std::vector<uint32_t> runs;
  bool current = false;
  uint32_t length = 0;
  for (int col = 0; col < mask.width(); ++col) {
    for (int row = 0; row < mask.height(); ++row) {
      const bool v = mask.at(row, col);
      if (v != current) {
        runs.push_back(length);
        length = 0;
        current = v;
      }
      ++length;
    }
  }
  runs.push_back(length);
  return RleMask(mask.height(), mask.width(), std::move(runs));
}

Overlap MaskOverlap(const BitMask& a, const BitMask& b) {
  CheckSameDims(a.height(), a.width(), b.height(), b.width());
  Overlap o;
  const auto da = a.data();
  const auto db = b.data();
  for (size_t i = 0; i < da.size(); ++i) {
    o.intersection += da[i] & db[i];
    o.union_area += da[i] | db[i];
  }
  return o;
}

Overlap RleOverlap(const RleMask& a, const RleMask& b) {
  CheckSameDims(a.height(), a.width(), b.height(), b.width());
  if (!a.bbox().Intersects(b.bbox())) {
    return {0, a.area() + b.area()};
  }
  const auto& ra = a.runs();
  const auto& rb = b.runs();
  Overlap o;
  size_t ia = 0;
  size_t ib = 0;
  uint64_t left_a = ra[0];
  uint64_t left_b = rb[0];
  bool fg_a = false;
  bool fg_b = false;
  while (ia < ra.size() && ib < rb.size()) {
    const uint64_t step = std::min(left_a, left_b);
    if (fg_a && fg_b) o.intersection += static_cast<int64_t>(step);
    if (fg_a || fg_b) o.union_area += static_cast<int64_t>(step);
    left_a -= step;
    left_b -= step;
    if (left_a == 0 && ++ia < ra.size()) {
      left_a = ra[ia];
      fg_a = !fg_a;
    }
    if (left_b == 0 && ++ib < rb.size()) {
      left_b = rb[ib];
      fg_b = !fg_b;
    }
  }
  return o;
}

double MaskIou(const BitMask& a, const BitMask& b) {
  return MaskOverlap(a, b).Iou();
}

double RleIou(const RleMask& a, const RleMask& b) {
  return RleOverlap(a, b).Iou();
}

int CompareIou(const Overlap& a, const Overlap& b) {
  // 0/0 is IoU 0, i.e. the same as 0/1.
  const __int128 an = a.intersection;
  const __int128 ad = a.union_area == 0 ? 1 : a.union_area;
  const __int128 bn = b.intersection;
  const __int128 bd = b.union_area == 0 ? 1 : b.union_area;
  const __int128 lhs = an * bd;
  const __int128 rhs = bn * ad;
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

std::vector<size_t> MaskNms(std::span<const NmsItem> items,
                            double iou_threshold) {
  for (const auto& item : items) {
    if (!std::isfinite(item.priority)) {
      throw InputError("NMS priority must be finite");
    }
    CheckSameDims(item.mask.get().height(), item.mask.get().width(),
                  items[0].mask.get().height(), items[0].mask.get().width());
  }
  std::vector<size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t l, size_t r) {
    return items[l].priority > items[r].priority;
  });

  std::vector<size_t> kept;
  for (size_t idx : order) {
    const RleMask& candidate = items[idx].mask;
    bool suppressed = false;
    for (size_t k : kept) {
      if (RleOverlap(items[k].mask, candidate).IouExceeds(iou_threshold)) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(idx);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace flowmatch
