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

// Binary instance masks in dense and run-length-encoded form.
//
// Run-length encoding follows the COCO convention: pixels are scanned in
// column-major order and the runs alternate background/foreground, starting
// with a (possibly empty) background run. The string form of the runs is the
// COCO compressed codestring, so masks written here can be read by pycocotools
// and vice versa.

#ifndef FLOWMATCH_MASK_H_
#define FLOWMATCH_MASK_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flowmatch {

// Dense binary mask, stored row-major with one byte per pixel.
class BitMask {
 public:
  // Throws InputError unless height >= 1 and width >= 1.
  BitMask(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }

  bool at(int row, int col) const {
    return bits_[static_cast<size_t>(row) * width_ + col] != 0;
  }
  void set(int row, int col, bool value = true) {
    bits_[static_cast<size_t>(row) * width_ + col] = value ? 1 : 0;
  }
  bool contains(int row, int col) const {
    return row >= 0 && row < height_ && col >= 0 && col < width_;
  }

  int64_t area() const;

  // Row-major pixel bytes, each 0 or 1.
  std::span<const uint8_t> data() const { return bits_; }

  friend bool operator==(const BitMask&, const BitMask&) = default;

 private:
  int height_;
  int width_;
  std::vector<uint8_t> bits_;
};

// Inclusive pixel bounding box; empty masks have `empty == true`.
struct BoundingBox {
  bool empty = true;
  int row_min = 0;
  int row_max = -1;
  int col_min = 0;
  int col_max = -1;

  bool Intersects(const BoundingBox& other) const {
    return !empty && !other.empty && row_min <= other.row_max &&
           other.row_min <= row_max && col_min <= other.col_max &&
           other.col_min <= col_max;
  }
};

// Run-length-encoded mask. Runs are always held in canonical form: only the
// leading background run may have length zero, and no trailing zero run is
// kept. Area and bounding box are cached at construction.
class RleMask {
 public:
  // Builds from raw runs, normalising zero-length interior runs. Throws
  // InputError if the dimensions are invalid or the runs do not sum to
  // height * width.
  RleMask(int height, int width, std::vector<uint32_t> runs);

  // Parses a compressed codestring.
  static RleMask FromString(int height, int width, std::string_view counts);

  // An all-background mask.
  static RleMask Empty(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  const std::vector<uint32_t>& runs() const { return runs_; }
  int64_t area() const { return area_; }
  const BoundingBox& bbox() const { return bbox_; }

  // Canonical compressed codestring of runs().
  std::string ToString() const;

  bool operator==(const RleMask& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           runs_ == other.runs_;
  }

 private:
  int height_;
  int width_;
  std::vector<uint32_t> runs_;
  int64_t area_ = 0;
  BoundingBox bbox_;
};

// COCO compressed-counts codec. Each value is written in 5-bit groups, low
// bits first, as characters '0' + group with bit 5 flagging continuation.
// From the fourth run on, values are stored as signed deltas against the run
// two positions earlier.
std::string CompressCounts(std::span<const uint32_t> runs);

// Throws InputError on characters outside '0'..'o', a truncated continuation
// chain, or a decoded run that is negative or overflows 32 bits.
std::vector<uint32_t> DecompressCounts(std::string_view counts);

BitMask DecodeRle(const RleMask& rle);

// Column-major linear indices (col * height + row) of the foreground pixels,
// ascending.
std::vector<uint32_t> ForegroundIndices(const RleMask& rle);
// Inverse of ForegroundIndices. `indices` may be unsorted and contain
// duplicates; each must be below height * width.
RleMask RleFromIndices(int height, int width, std::vector<uint32_t> indices);
RleMask EncodeRle(const BitMask& mask);

// Exact integer overlap of two masks.
struct Overlap {
  int64_t intersection = 0;
  int64_t union_area = 0;

  // intersection / union, with 0/0 defined as 0.
  double Iou() const {
    return union_area == 0 ? 0.0
                           : static_cast<double>(intersection) /
                                 static_cast<double>(union_area);
  }
  // Strict "IoU larger than threshold". The ratio is a correctly rounded
  // double, so a threshold literal equal to the exact ratio compares equal.
  bool IouExceeds(double threshold) const { return Iou() > threshold; }
};

// Throws InputError on a dimension mismatch.
Overlap MaskOverlap(const BitMask& a, const BitMask& b);
Overlap RleOverlap(const RleMask& a, const RleMask& b);

double MaskIou(const BitMask& a, const BitMask& b);
// Merges the run lists directly; equals MaskIou on the decoded masks.
double RleIou(const RleMask& a, const RleMask& b);

// Exact ordering of two overlaps by IoU value: negative, zero or positive.
int CompareIou(const Overlap& a, const Overlap& b);

struct NmsItem {
  std::reference_wrapper<const RleMask> mask;
  double priority;
};

// Greedy non-maximum suppression. Items are visited by descending priority,
// ties to the lower input index; an item is dropped if its IoU with any kept
// item is strictly greater than `iou_threshold`. Returns kept input indices
// in ascending order.
std::vector<size_t> MaskNms(std::span<const NmsItem> items,
                            double iou_threshold);

}  // namespace flowmatch

#endif  // FLOWMATCH_MASK_H_
