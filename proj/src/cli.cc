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

#include "flowmatch/cli.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "flowmatch/errors.h"
#include "flowmatch/eval.h"
#include "flowmatch/pipeline.h"
#include "flowmatch/synth.h"

namespace flowmatch {

namespace {

namespace fs = std::filesystem;

struct TrackArgs {
  std::string proposals;
  std::string flows;
  std::string out;
  TrackConfig cfg;
  int jobs = 1;
};

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::vector<int> max_dets = {1, 10, 100};
};

struct SynthArgs {
  std::string out;
  uint64_t seed = 0;
  RandomSceneParams scene;
  NoiseSpec noise;
  std::string video_id = "synth";
};

std::vector<fs::path> ProposalFiles(const fs::path& input) {
  if (!fs::exists(input)) throw InputError(input.string() + " does not exist");
  if (!fs::is_directory(input)) return {input};
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(input)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw InputError("no proposal .json files in " + input.string());
  }
  return files;
}

// A video reads its flows from `<flows>/<video_id>/` when that directory
// exists, otherwise straight from `<flows>/` (single-video runs only).
fs::path FlowDir(const fs::path& root, const std::string& video_id,
                 size_t num_videos) {
  const fs::path sub = root / video_id;
  if (fs::is_directory(sub)) return sub;
  if (num_videos > 1) {
    throw InputError("several videos given but " + sub.string() +
                     " is not a directory");
  }
  return root;
}

int RunTrack(const TrackArgs& args, std::ostream& out, std::ostream& err) {
  args.cfg.Validate();
  const auto files = ProposalFiles(args.proposals);
  std::vector<VideoResult> results(files.size());
  std::vector<std::exception_ptr> errors(files.size());
  std::atomic<size_t> next{0};

  auto worker = [&] {
    for (size_t i = next++; i < files.size(); i = next++) {
      try {
        VideoSequence seq;
        seq.proposals = LoadProposals(files[i], args.cfg, [&](const auto& m) {
          // Warnings may come from several threads; keep them line-atomic.
          static std::mutex mu;
          std::lock_guard<std::mutex> lock(mu);
          err << "warning: " << m << "\n";
        });
        const auto& p = seq.proposals;
        seq.flows = LoadFlows(FlowDir(args.flows, p.video_id, files.size()),
                              p.length, p.height, p.width);
        results[i] = {p.video_id, RunVideo(seq, args.cfg)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::clamp(args.jobs, 1, static_cast<int>(files.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const auto doc = MakeResultDocument(results);
  WriteResults(doc, args.out);
  out << "wrote " << doc.annotations.size() << " tracks for " << files.size()
      << " video(s) to " << args.out << "\n";
  return kExitOk;
}

int RunEval(const EvalArgs& args, std::ostream& out) {
  const auto report =
      Evaluate(ReadResults(args.pred), ReadResults(args.gt), args.max_dets);
  out << std::fixed << std::setprecision(4);
  out << "AP      " << report.ap << "\n";
  out << "AP@.5   " << report.ap50 << "\n";
  out << "AP@.75  " << report.ap75 << "\n";
  for (const auto& r : report.recall) {
    out << "AR@" << std::left << std::setw(5) << r.max_dets << std::right
        << report.Ar(r.max_dets) << "\n";
  }
  nlohmann::json j = {{"AP", report.ap},
                      {"AP50", report.ap50},
                      {"AP75", report.ap75}};
  for (const auto& r : report.recall) {
    j["AR@" + std::to_string(r.max_dets)] = r.recall;
  }
  out << j.dump() << "\n";
  return kExitOk;
}

int RunSynth(const SynthArgs& args, std::ostream& out) {
  SceneSpec spec = RandomSceneSpec(args.scene, args.seed);
  spec.noise = args.noise;
  const Scene scene = GenerateScene(spec);
  const auto proposals = PerturbProposals(scene, spec.noise, args.seed);
  WriteSceneFiles(scene, proposals, args.video_id, args.out);
  out << "wrote " << scene.frames << " frames with "
      << scene.gt_tracks.tracks.size() << " objects to " << args.out << "\n";
  return kExitOk;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Flow-guided mask tracking, evaluation and synthetic data"};
  app.require_subcommand(1);
  // Accepted after the subcommand too; option defaults live under a
  // [track], [eval] or [synth] section.
  app.set_config("--config", "", "TOML/INI file with option defaults");
  app.fallthrough();

  TrackArgs track_args;
  auto* track = app.add_subcommand("track", "link per-frame mask proposals");
  track->add_option("--proposals", track_args.proposals,
                    "proposal JSON file or directory of them")
      ->required();
  track->add_option("--flows", track_args.flows, "directory of .flo files")
      ->required();
  track->add_option("--out", track_args.out, "result JSON path")->required();
  track->add_option("--match-iou", track_args.cfg.match_iou,
                    "IoU a match must exceed")
      ->capture_default_str();
  track->add_option("--nms-iou", track_args.cfg.nms_iou,
                    "IoU above which duplicate trackers are suppressed")
      ->capture_default_str();
  track->add_option("--patience", track_args.cfg.patience,
                    "consecutive misses before a tracker is retired")
      ->capture_default_str();
  track->add_option("--top-k", track_args.cfg.top_k,
                    "proposals kept per frame")
      ->capture_default_str();
  track->add_flag("--fill-holes", track_args.cfg.fill_holes,
                  "close warped masks with one 3x3 pass");
  track->add_option("--jobs", track_args.jobs, "videos processed in parallel")
      ->capture_default_str();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "score results against ground truth");
  eval->add_option("--pred", eval_args.pred, "predicted results JSON")
      ->required();
  eval->add_option("--gt", eval_args.gt, "ground-truth results JSON")
      ->required();
  eval->add_option("--max-dets", eval_args.max_dets,
                   "comma-separated recall cut-offs")
      ->delimiter(',')
      ->capture_default_str();

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
  synth->add_option("--out", synth_args.out, "output directory")->required();
  synth->add_option("--seed", synth_args.seed, "random seed")->required();
  synth->add_option("--frames", synth_args.scene.frames, "video length")
      ->required();
  synth->add_option("--objects", synth_args.scene.objects, "object count")
      ->required();
  synth->add_option("--height", synth_args.scene.height)->capture_default_str();
  synth->add_option("--width", synth_args.scene.width)->capture_default_str();
  synth->add_option("--min-size", synth_args.scene.min_size,
                    "smallest object side, in pixels")
      ->capture_default_str();
  synth->add_option("--max-size", synth_args.scene.max_size,
                    "largest object side, in pixels")
      ->capture_default_str();
  synth->add_option("--max-speed", synth_args.scene.max_speed,
                    "largest per-frame displacement, in pixels")
      ->capture_default_str();
  synth->add_option("--drop-prob", synth_args.noise.drop_prob,
                    "probability of dropping a true proposal")
      ->capture_default_str();
  synth->add_option("--jitter", synth_args.noise.jitter_px,
                    "max shift and dilation of true proposals, in pixels")
      ->capture_default_str();
  synth->add_option("--fp-per-frame",
                    synth_args.noise.false_positives_per_frame,
                    "false-positive blobs per frame")
      ->capture_default_str();
  synth->add_option("--score-jitter", synth_args.noise.score_jitter,
                    "true proposals score in [1 - x, 1]")
      ->capture_default_str();
  synth->add_option("--video-id", synth_args.video_id)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*track) return RunTrack(track_args, out, err);
    if (*eval) return RunEval(eval_args, out);
    if (*synth) return RunSynth(synth_args, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternalError;
  }
  return kExitInternalError;
}

}  // namespace flowmatch
