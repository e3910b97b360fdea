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

// Flow-guided mask tracker.
//
// Each frame, the latest mask of every live tracker is pushed forward with
// the optical flow from the previous frame and greedily matched to the
// frame's mask proposals by IoU. Matched trackers adopt the proposal mask.
// Unmatched trackers coast on their warped mask and are retired after
// `patience` consecutive misses. Unmatched proposals start new trackers, and
// a final NMS pass retires duplicate trackers.

#ifndef FLOWMATCH_TRACKING_H_
#define FLOWMATCH_TRACKING_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flowmatch/flow.h"
#include "flowmatch/mask.h"

namespace flowmatch {

struct TrackConfig {
  double match_iou = 0.5;
  double nms_iou = 0.7;
  int patience = 5;
  int top_k = 100;
  // One closing pass on every warped mask. Off by default.
  bool fill_holes = false;

  // Throws InputError when a field is out of range.
  void Validate() const;
};

struct Detection {
  RleMask mask;
  double score = 0.0;
  int frame_index = 0;
  // Position within the frame's proposal list; used for tie-breaking.
  int source_index = 0;
};

enum class FrameStatus { kMatched, kCoasted };

struct HistoryEntry {
  int frame_index;
  RleMask mask;
  FrameStatus status;
};

struct Tracker {
  int64_t id = 0;
  RleMask latest_mask;
  int miss_streak = 0;
  int matched_frames = 0;
  double score_sum = 0.0;
  std::vector<HistoryEntry> history;
  int birth_frame = 0;
};

// matched_frames * score_sum. Coasted frames contribute to neither factor.
double TrackerScore(const Tracker& tracker);

struct TrackerSet {
  // Ascending by id.
  std::vector<Tracker> live;
  std::vector<Tracker> retired;
  int64_t next_id = 0;
  int current_frame = 0;
};

struct MatchPair {
  size_t tracker;    // index into the warped masks
  size_t detection;  // index into the detections
  Overlap overlap;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<size_t> unmatched_trackers;
  std::vector<size_t> unmatched_detections;
};

// One-to-one greedy matching: pairs are taken by descending IoU among
// unassigned rows and columns, and only pairs with IoU strictly above
// `match_iou` are eligible. Ties prefer the lower tracker index (callers pass
// trackers in id order), then the lower detection source_index. Unmatched
// lists are ascending.
MatchResult MatchStep(std::span<const RleMask> warped,
                      std::span<const Detection> detections, double match_iou);

// Frame-0 trackers. Detections must belong to frame 0.
TrackerSet InitTrackers(std::span<const Detection> detections,
                        const TrackConfig& cfg);

// Moves the tracker set from frame t-1 to t = current_frame + 1 using
// `flow_prev` (flow from t-1 to t) and the proposals of frame t. Throws
// InputError if a detection is not from frame t or the dimensions of flow
// and masks disagree.
TrackerSet AdvanceFrame(TrackerSet state, const FlowField& flow_prev,
                        std::span<const Detection> detections,
                        const TrackConfig& cfg);

struct Track {
  int64_t track_id = 0;
  double score = 0.0;
  // One slot per video frame.
  std::vector<std::optional<RleMask>> masks;
};

struct VideoTracks {
  int video_length = 0;
  int height = 0;
  int width = 0;
  std::vector<Track> tracks;
};

// Retires every live tracker and lays each history out over [0,
// video_length). Trailing coasted entries are dropped; interior coasted
// masks are kept. Tracks are ordered by descending score, ties by id.
VideoTracks Finalize(TrackerSet state, int video_length, int height,
                     int width);

}  // namespace flowmatch

#endif  // FLOWMATCH_TRACKING_H_
