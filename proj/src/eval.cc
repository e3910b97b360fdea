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

#include "flowmatch/eval.h"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>

#include "flowmatch/errors.h"

namespace flowmatch {

namespace {

constexpr int kRecallPoints = 101;

using Segs = std::vector<std::optional<RleMask>>;

struct Ranked {
  double score;
  size_t video;
  int64_t track_id;
  // Position within its video after sorting.
  int rank;
  // matched[t] for each IoU threshold.
  std::vector<bool> matched;
};

std::map<std::string, std::vector<const ResultAnnotation*>> GroupByVideo(
    const ResultDocument& doc, const char* what) {
  std::map<std::string, std::vector<const ResultAnnotation*>> out;
  std::set<std::pair<std::string, int64_t>> seen;
  for (const auto& a : doc.annotations) {
    if (!seen.emplace(a.video_id, a.track_id).second) {
      throw InputError(std::string("duplicate track id ") +
                       std::to_string(a.track_id) + " for video " +
                       a.video_id + " in " + what);
    }
    out[a.video_id].push_back(&a);
  }
  return out;
}

double InterpolatedAp(const std::vector<const Ranked*>& ranked, size_t t,
                      int64_t num_gt) {
  const size_t n = ranked.size();
  std::vector<double> recall(n);
  std::vector<double> precision(n);
  int64_t tp = 0;
  for (size_t i = 0; i < n; ++i) {
    if (ranked[i]->matched[t]) ++tp;
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (size_t i = n; i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0.0;
  for (int k = 0; k < kRecallPoints; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[it - recall.begin()];
  }
  return sum / kRecallPoints;
}

}  // namespace

double EvalReport::Ar(int max_dets) const {
  for (const auto& r : recall) {
    if (r.max_dets == max_dets) return r.recall;
  }
  throw std::out_of_range("recall at " + std::to_string(max_dets) +
                          " was not evaluated");
}

std::vector<double> IouThresholds() {
  std::vector<double> out;
  for (int i = 0; i < 10; ++i) out.push_back((50 + 5 * i) / 100.0);
  return out;
}

double StIou(const Segs& a, const Segs& b) {
  if (a.size() != b.size()) {
    throw InputError("tracks span different video lengths: " +
                     std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  int64_t inter = 0;
  int64_t uni = 0;
  for (size_t t = 0; t < a.size(); ++t) {
    if (a[t] && b[t]) {
      const Overlap o = RleOverlap(*a[t], *b[t]);
      inter += o.intersection;
      uni += o.union_area;
    } else if (a[t]) {
      uni += a[t]->area();
    } else if (b[t]) {
      uni += b[t]->area();
    }
  }
  return Overlap{inter, uni}.Iou();
}

EvalReport Evaluate(const ResultDocument& preds, const ResultDocument& gts,
                    const std::vector<int>& max_dets) {
  if (max_dets.empty()) throw InputError("max_dets must not be empty");
  for (int k : max_dets) {
    if (k < 1) throw InputError("max_dets entries must be positive");
  }
  const int max_det = *std::max_element(max_dets.begin(), max_dets.end());
  const auto pred_videos = GroupByVideo(preds, "predictions");
  const auto gt_videos = GroupByVideo(gts, "ground truth");
  for (const auto& [video, unused] : pred_videos) {
    if (!gt_videos.contains(video)) {
      throw InputError("predictions reference unknown video " + video);
    }
  }

  const auto thresholds = IouThresholds();
  const size_t num_thr = thresholds.size();
  std::vector<Ranked> ranked;
  int64_t num_gt = 0;
  size_t video_index = 0;
  for (const auto& [video, gt_list] : gt_videos) {
    std::vector<const ResultAnnotation*> g = gt_list;
    std::sort(g.begin(), g.end(), [](const auto* l, const auto* r) {
      return l->track_id < r->track_id;
    });
    num_gt += static_cast<int64_t>(g.size());

    std::vector<const ResultAnnotation*> d;
    if (auto it = pred_videos.find(video); it != pred_videos.end()) {
      d = it->second;
    }
    std::sort(d.begin(), d.end(), [](const auto* l, const auto* r) {
      if (l->score != r->score) return l->score > r->score;
      return l->track_id < r->track_id;
    });
    if (static_cast<int>(d.size()) > max_det) d.resize(max_det);

    std::vector<std::vector<double>> iou(d.size(),
                                         std::vector<double>(g.size()));
    for (size_t i = 0; i < d.size(); ++i) {
      for (size_t j = 0; j < g.size(); ++j) {
        iou[i][j] = StIou(d[i]->segmentations, g[j]->segmentations);
      }
    }

    std::vector<Ranked> local(d.size());
    for (size_t i = 0; i < d.size(); ++i) {
      local[i] = {d[i]->score, video_index, d[i]->track_id,
                  static_cast<int>(i), std::vector<bool>(num_thr, false)};
    }
    for (size_t t = 0; t < num_thr; ++t) {
      std::vector<bool> gt_taken(g.size(), false);
      for (size_t i = 0; i < d.size(); ++i) {
        int best = -1;
        for (size_t j = 0; j < g.size(); ++j) {
          if (gt_taken[j] || iou[i][j] < thresholds[t]) continue;
          if (best < 0 || iou[i][j] > iou[i][best]) best = static_cast<int>(j);
        }
        if (best >= 0) {
          gt_taken[best] = true;
          local[i].matched[t] = true;
        }
      }
    }
    ranked.insert(ranked.end(), local.begin(), local.end());
    ++video_index;
  }

  EvalReport report;
  if (num_gt == 0) {
    for (int k : max_dets) report.recall.push_back({k, 0.0});
    return report;
  }

  std::vector<const Ranked*> order;
  order.reserve(ranked.size());
  for (const auto& r : ranked) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](const Ranked* l, const Ranked* r) {
    if (l->score != r->score) return l->score > r->score;
    if (l->video != r->video) return l->video < r->video;
    return l->track_id < r->track_id;
  });

  double ap_sum = 0.0;
  for (size_t t = 0; t < num_thr; ++t) {
    const double ap_t = InterpolatedAp(order, t, num_gt);
    ap_sum += ap_t;
    if (t == 0) report.ap50 = ap_t;
    if (t == 5) report.ap75 = ap_t;
  }
  report.ap = ap_sum / static_cast<double>(num_thr);

  for (int k : max_dets) {
    double recall_sum = 0.0;
    for (size_t t = 0; t < num_thr; ++t) {
      int64_t hits = 0;
      for (const auto& r : ranked) {
        if (r.rank < k && r.matched[t]) ++hits;
      }
      recall_sum += static_cast<double>(hits) / static_cast<double>(num_gt);
    }
    report.recall.push_back({k, recall_sum / static_cast<double>(num_thr)});
  }
  return report;
}

}  // namespace flowmatch
