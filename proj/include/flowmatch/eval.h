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

// Class-agnostic video instance segmentation metrics: the COCO detection
// protocol lifted from masks to tracks via spatio-temporal IoU.

#ifndef FLOWMATCH_EVAL_H_
#define FLOWMATCH_EVAL_H_

#include <optional>
#include <string>
#include <vector>

#include "flowmatch/mask.h"
#include "flowmatch/pipeline.h"

namespace flowmatch {

// Sum over frames of |a ∩ b| divided by the sum of |a ∪ b|; absent frames
// are empty masks and 0/0 is 0. Throws InputError when the track lengths
// differ.
double StIou(const std::vector<std::optional<RleMask>>& a,
             const std::vector<std::optional<RleMask>>& b);

struct RecallAtK {
  int max_dets;
  double recall;
};

struct EvalReport {
  // Mean over IoU thresholds 0.50:0.05:0.95 of 101-point interpolated
  // precision, using the largest max_dets.
  double ap = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  // One entry per requested max_dets, in the order given.
  std::vector<RecallAtK> recall;

  // Recall for a given K; throws std::out_of_range if K was not evaluated.
  double Ar(int max_dets) const;
};

std::vector<double> IouThresholds();

// Per video, predictions are ranked by descending score (ties by track id)
// and each is greedily matched to the unmatched ground truth with the
// highest st-IoU at or above the threshold. A ground-truth set with no
// tracks yields all-zero metrics. Throws InputError on duplicate
// (video_id, track_id) pairs within either document, on predictions for
// videos absent from the ground truth, and on length mismatches.
EvalReport Evaluate(const ResultDocument& preds, const ResultDocument& gts,
                    const std::vector<int>& max_dets = {1, 10, 100});

}  // namespace flowmatch

#endif  // FLOWMATCH_EVAL_H_
