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

#include "flowmatch/tracking.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "flowmatch/errors.h"

namespace flowmatch {

namespace {

void CheckFrame(std::span<const Detection> detections, int frame) {
  for (const auto& d : detections) {
    if (d.frame_index != frame) {
      throw InputError("detection from frame " + std::to_string(d.frame_index) +
                       " passed while processing frame " +
                       std::to_string(frame));
    }
  }
}

// Detection indices by descending score, then ascending source_index.
std::vector<size_t> SpawnOrder(std::span<const Detection> detections,
                               std::span<const size_t> subset) {
  std::vector<size_t> order(subset.begin(), subset.end());
  std::sort(order.begin(), order.end(), [&](size_t l, size_t r) {
    const auto& a = detections[l];
    const auto& b = detections[r];
    if (a.score != b.score) return a.score > b.score;
    return a.source_index < b.source_index;
  });
  return order;
}

void Spawn(TrackerSet& state, const Detection& d, int frame) {
  state.live.push_back(Tracker{
      .id = state.next_id++,
      .latest_mask = d.mask,
      .miss_streak = 0,
      .matched_frames = 1,
      .score_sum = d.score,
      .history = {HistoryEntry{frame, d.mask, FrameStatus::kMatched}},
      .birth_frame = frame,
  });
}

// Suppressed trackers with history from earlier frames are retired. A
// tracker spawned in this very frame is only a duplicate proposal and is
// discarded.
void SuppressDuplicates(TrackerSet& state, int frame, double nms_iou) {
  std::vector<NmsItem> items;
  items.reserve(state.live.size());
  for (const auto& tr : state.live) {
    items.push_back({tr.latest_mask, TrackerScore(tr)});
  }
  const auto kept = MaskNms(items, nms_iou);
  if (kept.size() == state.live.size()) return;

  std::vector<Tracker> survivors;
  survivors.reserve(kept.size());
  size_t k = 0;
  for (size_t i = 0; i < state.live.size(); ++i) {
    if (k < kept.size() && kept[k] == i) {
      survivors.push_back(std::move(state.live[i]));
      ++k;
    } else if (state.live[i].birth_frame != frame) {
      state.retired.push_back(std::move(state.live[i]));
    }
  }
  state.live = std::move(survivors);
}

void CheckLifecycle(const TrackerSet& state, const TrackConfig& cfg) {
  for (size_t i = 0; i < state.live.size(); ++i) {
    const auto& tr = state.live[i];
    if (tr.miss_streak >= cfg.patience || tr.matched_frames < 1 ||
        (i > 0 && state.live[i - 1].id >= tr.id) || tr.id >= state.next_id) {
      throw InvariantError("tracker " + std::to_string(tr.id) +
                           " violates lifecycle invariants");
    }
  }
}

}  // namespace

void TrackConfig::Validate() const {
  if (!(match_iou > 0.0 && match_iou < 1.0)) {
    throw InputError("match_iou must lie in (0, 1)");
  }
  if (!(nms_iou > 0.0 && nms_iou < 1.0)) {
    throw InputError("nms_iou must lie in (0, 1)");
  }
  if (patience < 1) throw InputError("patience must be at least 1");
  if (top_k < 1) throw InputError("top_k must be at least 1");
}

double TrackerScore(const Tracker& tracker) {
  return static_cast<double>(tracker.matched_frames) * tracker.score_sum;
}

MatchResult MatchStep(std::span<const RleMask> warped,
                      std::span<const Detection> detections, double match_iou) {
  std::vector<MatchPair> candidates;
  for (size_t t = 0; t < warped.size(); ++t) {
    for (size_t d = 0; d < detections.size(); ++d) {
      const Overlap o = RleOverlap(warped[t], detections[d].mask);
      if (o.IouExceeds(match_iou)) candidates.push_back({t, d, o});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [&](const MatchPair& a, const MatchPair& b) {
              const int c = CompareIou(a.overlap, b.overlap);
              if (c != 0) return c > 0;
              if (a.tracker != b.tracker) return a.tracker < b.tracker;
              return detections[a.detection].source_index <
                     detections[b.detection].source_index;
            });

  MatchResult result;
  std::vector<bool> tracker_used(warped.size(), false);
  std::vector<bool> detection_used(detections.size(), false);
  for (const auto& c : candidates) {
    if (tracker_used[c.tracker] || detection_used[c.detection]) continue;
    tracker_used[c.tracker] = true;
    detection_used[c.detection] = true;
    result.pairs.push_back(c);
  }
  for (size_t t = 0; t < warped.size(); ++t) {
    if (!tracker_used[t]) result.unmatched_trackers.push_back(t);
  }
  for (size_t d = 0; d < detections.size(); ++d) {
    if (!detection_used[d]) result.unmatched_detections.push_back(d);
  }
  return result;
}

TrackerSet InitTrackers(std::span<const Detection> detections,
                        const TrackConfig& cfg) {
  cfg.Validate();
  CheckFrame(detections, 0);
  TrackerSet state;
  std::vector<size_t> all(detections.size());
  std::iota(all.begin(), all.end(), 0);
  for (size_t d : SpawnOrder(detections, all)) Spawn(state, detections[d], 0);
  SuppressDuplicates(state, 0, cfg.nms_iou);
  state.current_frame = 0;
  CheckLifecycle(state, cfg);
  return state;
}

TrackerSet AdvanceFrame(TrackerSet state, const FlowField& flow_prev,
                        std::span<const Detection> detections,
                        const TrackConfig& cfg) {
  cfg.Validate();
  const int frame = state.current_frame + 1;
  CheckFrame(detections, frame);
  for (const auto& d : detections) {
    if (d.mask.height() != flow_prev.height() ||
        d.mask.width() != flow_prev.width()) {
      throw InputError("detection mask and flow dimensions differ");
    }
  }

  std::vector<RleMask> warped;
  warped.reserve(state.live.size());
  for (const auto& tr : state.live) {
    RleMask w = WarpRleForward(tr.latest_mask, flow_prev);
    if (cfg.fill_holes) w = EncodeRle(CloseMask(DecodeRle(w)));
    warped.push_back(std::move(w));
  }

  const MatchResult match = MatchStep(warped, detections, cfg.match_iou);

  for (const auto& pair : match.pairs) {
    Tracker& tr = state.live[pair.tracker];
    const Detection& d = detections[pair.detection];
    tr.latest_mask = d.mask;
    tr.matched_frames += 1;
    tr.score_sum += d.score;
    tr.miss_streak = 0;
    tr.history.push_back({frame, d.mask, FrameStatus::kMatched});
  }
  for (size_t t : match.unmatched_trackers) {
    Tracker& tr = state.live[t];
    tr.latest_mask = std::move(warped[t]);
    tr.miss_streak += 1;
    tr.history.push_back({frame, tr.latest_mask, FrameStatus::kCoasted});
  }

  std::vector<Tracker> still_live;
  still_live.reserve(state.live.size() + match.unmatched_detections.size());
  for (auto& tr : state.live) {
    if (tr.miss_streak >= cfg.patience) {
      state.retired.push_back(std::move(tr));
    } else {
      still_live.push_back(std::move(tr));
    }
  }
  state.live = std::move(still_live);

  for (size_t d : SpawnOrder(detections, match.unmatched_detections)) {
    Spawn(state, detections[d], frame);
  }
  SuppressDuplicates(state, frame, cfg.nms_iou);
  state.current_frame = frame;
  CheckLifecycle(state, cfg);
  return state;
}

VideoTracks Finalize(TrackerSet state, int video_length, int height,
                     int width) {
  if (video_length < 1) throw InputError("video length must be positive");
  for (auto& tr : state.live) state.retired.push_back(std::move(tr));
  state.live.clear();

  VideoTracks out;
  out.video_length = video_length;
  out.height = height;
  out.width = width;
  for (const auto& tr : state.retired) {
    Track track;
    track.track_id = tr.id;
    track.score = TrackerScore(tr);
    track.masks.assign(video_length, std::nullopt);
    auto last_matched = std::find_if(
        tr.history.rbegin(), tr.history.rend(),
        [](const HistoryEntry& e) { return e.status == FrameStatus::kMatched; });
    if (last_matched == tr.history.rend()) {
      throw InvariantError("tracker " + std::to_string(tr.id) +
                           " has no matched frame");
    }
    const auto end = last_matched.base();
    for (auto it = tr.history.begin(); it != end; ++it) {
      if (it->frame_index < 0 || it->frame_index >= video_length) {
        throw InputError("tracker history frame outside the video");
      }
      track.masks[it->frame_index] = it->mask;
    }
    out.tracks.push_back(std::move(track));
  }
  std::sort(out.tracks.begin(), out.tracks.end(),
            [](const Track& a, const Track& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.track_id < b.track_id;
            });
  return out;
}

}  // namespace flowmatch
