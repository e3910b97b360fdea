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

// Proposal/flow ingestion, per-video orchestration and result documents.
//
// Proposals (one JSON document per video):
//   {"video_id": str, "height": int, "width": int, "length": int,
//    "frames": [[{"segmentation": {"size": [h, w], "counts": str},
//                 "score": float}, ...], ...]}
//
// Results:
//   {"annotations": [{"video_id": str, "score": float, "track_id": int,
//                     "segmentations": [{"size": [h, w], "counts": str} |
//                                       null, ...]}]}

#ifndef FLOWMATCH_PIPELINE_H_
#define FLOWMATCH_PIPELINE_H_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flowmatch/flow.h"
#include "flowmatch/tracking.h"
#include "json.hpp"

namespace flowmatch {

struct VideoProposals {
  std::string video_id;
  int height = 0;
  int width = 0;
  int length = 0;
  // frames[t] sorted by descending score and capped at top_k.
  std::vector<std::vector<Detection>> frames;
};

struct VideoSequence {
  VideoProposals proposals;
  // flows[t] carries frame t to t+1; length - 1 entries.
  std::vector<FlowField> flows;
};

// Receives ingestion warnings (e.g. clamped scores). Defaults to stderr.
using WarningSink = std::function<void(const std::string&)>;

VideoProposals ParseProposals(const nlohmann::json& doc,
                              const TrackConfig& cfg,
                              const WarningSink& warn = {});
VideoProposals LoadProposals(const std::filesystem::path& path,
                             const TrackConfig& cfg,
                             const WarningSink& warn = {});

// Reads `<dir>/000000.flo` .. `<dir>/{length-2:06d}.flo` and checks their
// dimensions.
std::vector<FlowField> LoadFlows(const std::filesystem::path& dir, int length,
                                 int height, int width);

// Throws InputError unless flows and masks are consistent with the header.
void ValidateSequence(const VideoSequence& seq);

// InitTrackers on frame 0, AdvanceFrame for every later frame, Finalize.
VideoTracks RunVideo(const VideoSequence& seq, const TrackConfig& cfg);

struct ResultAnnotation {
  std::string video_id;
  double score = 0.0;
  int64_t track_id = 0;
  int height = 0;
  int width = 0;
  std::vector<std::optional<RleMask>> segmentations;
};

struct ResultDocument {
  std::vector<ResultAnnotation> annotations;
};

struct VideoResult {
  std::string video_id;
  VideoTracks tracks;
};

ResultDocument MakeResultDocument(const std::vector<VideoResult>& videos);

nlohmann::json ResultsToJson(const ResultDocument& doc);
ResultDocument ResultsFromJson(const nlohmann::json& doc);

// Atomic: writes `<path>.tmp` and renames it over `path`.
void WriteResults(const ResultDocument& doc, const std::filesystem::path& path);
ResultDocument ReadResults(const std::filesystem::path& path);

nlohmann::json RleToJson(const RleMask& mask);
RleMask RleFromJson(const nlohmann::json& j);

// Writes `text` to `path` through a temporary file and rename.
void WriteFileAtomic(const std::filesystem::path& path,
                     const std::string& text);
nlohmann::json ReadJsonFile(const std::filesystem::path& path);

}  // namespace flowmatch

#endif  // FLOWMATCH_PIPELINE_H_
