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

#include "flowmatch/pipeline.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "flowmatch/errors.h"

namespace flowmatch {

namespace {

using nlohmann::json;

void DefaultWarn(const std::string& msg) {
  std::cerr << "warning: " << msg << "\n";
}

template <typename T>
T Field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw InputError(std::string("missing field \"") + key + "\"");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("field \"") + key + "\" has the wrong type");
  }
}

int PositiveInt(const json& obj, const char* key) {
  const json& v = obj.contains(key) ? obj.at(key) : json();
  if (!v.is_number_integer() || v.get<int64_t>() < 1 ||
      v.get<int64_t>() > (int64_t{1} << 30)) {
    throw InputError(std::string("field \"") + key +
                     "\" must be a positive integer");
  }
  return v.get<int>();
}

}  // namespace

nlohmann::json RleToJson(const RleMask& mask) {
  return json{{"size", {mask.height(), mask.width()}},
              {"counts", mask.ToString()}};
}

RleMask RleFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("segmentation must be an object");
  const json& size = j.contains("size") ? j.at("size") : json();
  if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() ||
      !size[1].is_number_integer()) {
    throw InputError("segmentation size must be [height, width]");
  }
  const auto counts = Field<std::string>(j, "counts");
  return RleMask::FromString(size[0].get<int>(), size[1].get<int>(), counts);
}

VideoProposals ParseProposals(const nlohmann::json& doc,
                              const TrackConfig& cfg, const WarningSink& warn) {
  cfg.Validate();
  const WarningSink& sink = warn ? warn : WarningSink(DefaultWarn);
  VideoProposals out;
  out.video_id = Field<std::string>(doc, "video_id");
  out.height = PositiveInt(doc, "height");
  out.width = PositiveInt(doc, "width");
  out.length = PositiveInt(doc, "length");
  const json& frames = doc.contains("frames") ? doc.at("frames") : json();
  if (!frames.is_array()) throw InputError("\"frames\" must be an array");
  if (static_cast<int>(frames.size()) != out.length) {
    throw InputError("video " + out.video_id + " declares length " +
                     std::to_string(out.length) + " but has " +
                     std::to_string(frames.size()) + " frames");
  }

  out.frames.resize(out.length);
  for (int t = 0; t < out.length; ++t) {
    const json& frame = frames[t];
    if (!frame.is_array()) {
      throw InputError("frame " + std::to_string(t) + " must be an array");
    }
    auto& dets = out.frames[t];
    dets.reserve(frame.size());
    for (size_t i = 0; i < frame.size(); ++i) {
      const json& prop = frame[i];
      const std::string where = out.video_id + " frame " + std::to_string(t) +
                                " proposal " + std::to_string(i);
      RleMask mask = [&] {
        try {
          return RleFromJson(prop.is_object() && prop.contains("segmentation")
                                 ? prop.at("segmentation")
                                 : json());
        } catch (const InputError& e) {
          throw InputError(where + ": " + e.what());
        }
      }();
      if (mask.height() != out.height || mask.width() != out.width) {
        throw InputError(where + ": mask size differs from video size");
      }
      const json& s = prop.contains("score") ? prop.at("score") : json();
      if (!s.is_number()) throw InputError(where + ": score must be a number");
      double score = s.get<double>();
      if (!std::isfinite(score)) {
        throw InputError(where + ": score is not finite");
      }
      if (score < 0.0 || score > 1.0) {
        const double clamped = std::clamp(score, 0.0, 1.0);
        std::ostringstream msg;
        msg << where << ": score " << score << " clamped to " << clamped;
        sink(msg.str());
        score = clamped;
      }
      dets.push_back(Detection{std::move(mask), score, t, static_cast<int>(i)});
    }
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) {
                       return a.score > b.score;
                     });
    if (static_cast<int>(dets.size()) > cfg.top_k) {
      dets.erase(dets.begin() + cfg.top_k, dets.end());
    }
  }
  return out;
}

nlohmann::json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

VideoProposals LoadProposals(const std::filesystem::path& path,
                             const TrackConfig& cfg, const WarningSink& warn) {
  try {
    return ParseProposals(ReadJsonFile(path), cfg, warn);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::vector<FlowField> LoadFlows(const std::filesystem::path& dir, int length,
                                 int height, int width) {
  std::vector<FlowField> flows;
  flows.reserve(std::max(length - 1, 0));
  for (int t = 0; t + 1 < length; ++t) {
    FlowField f = ReadFloFile(dir / FloFileName(t));
    if (f.height() != height || f.width() != width) {
      throw InputError((dir / FloFileName(t)).string() +
                       ": flow size differs from video size");
    }
    flows.push_back(std::move(f));
  }
  return flows;
}

void ValidateSequence(const VideoSequence& seq) {
  const auto& p = seq.proposals;
  if (p.length < 1) throw InputError("video length must be positive");
  if (static_cast<int>(p.frames.size()) != p.length) {
    throw InputError("frame count differs from video length");
  }
  if (static_cast<int>(seq.flows.size()) != p.length - 1) {
    throw InputError("video " + p.video_id + " needs " +
                     std::to_string(p.length - 1) + " flows, got " +
                     std::to_string(seq.flows.size()));
  }
  for (const auto& f : seq.flows) {
    if (f.height() != p.height || f.width() != p.width) {
      throw InputError("flow size differs from video size");
    }
  }
  for (const auto& frame : p.frames) {
    for (const auto& d : frame) {
      if (d.mask.height() != p.height || d.mask.width() != p.width) {
        throw InputError("mask size differs from video size");
      }
    }
  }
}

VideoTracks RunVideo(const VideoSequence& seq, const TrackConfig& cfg) {
  ValidateSequence(seq);
  const auto& p = seq.proposals;
  TrackerSet state = InitTrackers(p.frames[0], cfg);
  for (int t = 1; t < p.length; ++t) {
    state = AdvanceFrame(std::move(state), seq.flows[t - 1], p.frames[t], cfg);
  }
  return Finalize(std::move(state), p.length, p.height, p.width);
}

ResultDocument MakeResultDocument(const std::vector<VideoResult>& videos) {
  ResultDocument doc;
  for (const auto& v : videos) {
    for (const auto& track : v.tracks.tracks) {
      doc.annotations.push_back({v.video_id, track.score, track.track_id,
                                 v.tracks.height, v.tracks.width,
                                 track.masks});
    }
  }
  return doc;
}

nlohmann::json ResultsToJson(const ResultDocument& doc) {
  json annotations = json::array();
  for (const auto& a : doc.annotations) {
    json segs = json::array();
    for (const auto& m : a.segmentations) {
      segs.push_back(m ? RleToJson(*m) : json(nullptr));
    }
    annotations.push_back({{"video_id", a.video_id},
                           {"score", a.score},
                           {"track_id", a.track_id},
                           {"segmentations", std::move(segs)}});
  }
  return json{{"annotations", std::move(annotations)}};
}

ResultDocument ResultsFromJson(const nlohmann::json& doc) {
  const json& annotations =
      doc.is_object() && doc.contains("annotations") ? doc.at("annotations")
                                                     : json();
  if (!annotations.is_array()) {
    throw InputError("\"annotations\" must be an array");
  }
  ResultDocument out;
  for (const json& a : annotations) {
    ResultAnnotation ann;
    ann.video_id = Field<std::string>(a, "video_id");
    ann.score = Field<double>(a, "score");
    ann.track_id = Field<int64_t>(a, "track_id");
    const json& segs =
        a.contains("segmentations") ? a.at("segmentations") : json();
    if (!segs.is_array() || segs.empty()) {
      throw InputError("\"segmentations\" must be a non-empty array");
    }
    for (const json& s : segs) {
      if (s.is_null()) {
        ann.segmentations.emplace_back(std::nullopt);
        continue;
      }
      RleMask m = RleFromJson(s);
      if (ann.height == 0) {
        ann.height = m.height();
        ann.width = m.width();
      } else if (m.height() != ann.height || m.width() != ann.width) {
        throw InputError("track " + std::to_string(ann.track_id) +
                         " mixes segmentation sizes");
      }
      ann.segmentations.emplace_back(std::move(m));
    }
    out.annotations.push_back(std::move(ann));
  }
  return out;
}

void WriteFileAtomic(const std::filesystem::path& path,
                     const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw InputError("cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot rename onto " + path.string());
}

void WriteResults(const ResultDocument& doc,
                  const std::filesystem::path& path) {
  WriteFileAtomic(path, ResultsToJson(doc).dump() + "\n");
}

ResultDocument ReadResults(const std::filesystem::path& path) {
  try {
    return ResultsFromJson(ReadJsonFile(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace flowmatch
