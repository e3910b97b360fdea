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

// Synthetic scenes of rigid shapes moving with constant integer velocity,
// with exact flow, ground-truth tracks and noisy proposals.
//
// Randomness comes from std::mt19937_64 (its output sequence is fixed by the
// C++ standard). Every frame or object draws from its own engine seeded with
// SplitMix64(seed, stream), and bounded values are derived from the raw
// 64-bit outputs here rather than through std:: distributions, whose
// algorithms vary between standard libraries.

#ifndef FLOWMATCH_SYNTH_H_
#define FLOWMATCH_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "flowmatch/flow.h"
#include "flowmatch/mask.h"
#include "flowmatch/pipeline.h"
#include "flowmatch/tracking.h"

namespace flowmatch {

enum class Shape { kRectangle, kEllipse };

struct ObjectSpec {
  Shape shape = Shape::kRectangle;
  int size_rows = 10;
  int size_cols = 10;
  // Top-left corner at the birth frame; may lie off-canvas.
  int start_row = 0;
  int start_col = 0;
  int velocity_rows = 0;
  int velocity_cols = 0;
  int birth_frame = 0;
  // Inclusive. Negative means the object lives until the last frame.
  int death_frame = -1;
};

struct NoiseSpec {
  double drop_prob = 0.0;
  int jitter_px = 0;
  int false_positives_per_frame = 0;
  // True proposals score uniformly in [1 - score_jitter, 1]; false
  // positives in [fp_score_min, fp_score_max].
  double score_jitter = 0.0;
  double fp_score_min = 0.05;
  double fp_score_max = 0.5;
};

struct SceneSpec {
  int height = 480;
  int width = 640;
  int frames = 1;
  std::vector<ObjectSpec> objects;
  uint64_t seed = 0;
  NoiseSpec noise;
};

struct Scene {
  int height = 0;
  int width = 0;
  int frames = 0;
  // masks[object][frame]: visible pixels, nullopt when absent or fully
  // hidden.
  std::vector<std::vector<std::optional<RleMask>>> masks;
  // fully_visible[object][frame]: alive, entirely on the canvas and not
  // covered by any later object.
  std::vector<std::vector<bool>> fully_visible;
  std::vector<FlowField> flows;
  // One track per object with at least one visible frame; track_id is the
  // object index and score 1.
  VideoTracks gt_tracks;
};

uint64_t SplitMix64(uint64_t seed, uint64_t stream);

// Deterministic helpers on top of a raw engine.
class SceneRng {
 public:
  explicit SceneRng(uint64_t seed) : engine_(seed) {}
  SceneRng(uint64_t seed, uint64_t stream)
      : engine_(SplitMix64(seed, stream)) {}

  uint64_t Next() { return engine_(); }
  // Uniform on [0, 1) with 53 bits.
  double Uniform() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }
  // Uniform integer in [lo, hi], by rejection.
  int64_t Int(int64_t lo, int64_t hi);
  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

// Throws InputError on frames < 1, non-positive canvas or a zero-area
// object.
Scene GenerateScene(const SceneSpec& spec);

// Proposals per frame, sorted by descending score. GT masks are dropped with
// drop_prob, translated by up to jitter_px per axis and dilated or eroded by
// up to jitter_px; false positives are random blobs.
std::vector<std::vector<Detection>> PerturbProposals(const Scene& scene,
                                                     const NoiseSpec& noise,
                                                     uint64_t seed);

struct RandomSceneParams {
  int height = 480;
  int width = 640;
  int frames = 60;
  int objects = 5;
  int min_size = 30;
  int max_size = 80;
  int max_speed = 3;
  // Reject placements whose bounding boxes meet in any frame; objects also
  // stay fully inside the canvas for the whole video.
  bool non_overlapping = true;
};

// Objects live for the whole video. Throws InputError if placement fails.
SceneSpec RandomSceneSpec(const RandomSceneParams& params, uint64_t seed);

// Writes proposals.json, flows/NNNNNN.flo and gt.json under `dir`.
void WriteSceneFiles(const Scene& scene,
                     const std::vector<std::vector<Detection>>& proposals,
                     const std::string& video_id,
                     const std::filesystem::path& dir);

nlohmann::json ProposalsToJson(
    const std::string& video_id, int height, int width,
    const std::vector<std::vector<Detection>>& proposals);

}  // namespace flowmatch

#endif  // FLOWMATCH_SYNTH_H_
