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

#include "flowmatch/synth.h"

#include <algorithm>
#include <limits>

#include "flowmatch/errors.h"

namespace flowmatch {

namespace {

struct Footprint {
  int row0;
  int col0;
  int rows;
  int cols;
  Shape shape;
};

// Shape membership relative to the top-left corner, so that integer
// translation moves the footprint exactly.
bool InShape(const Footprint& f, int dr, int dc) {
  if (dr < 0 || dr >= f.rows || dc < 0 || dc >= f.cols) return false;
  if (f.shape == Shape::kRectangle) return true;
  const double ry = f.rows / 2.0;
  const double rx = f.cols / 2.0;
  const double y = (dr + 0.5 - ry) / ry;
  const double x = (dc + 0.5 - rx) / rx;
  return x * x + y * y <= 1.0;
}

template <typename Fn>
void ForEachShapePixel(const Footprint& f, Fn&& fn) {
  for (int dc = 0; dc < f.cols; ++dc) {
    for (int dr = 0; dr < f.rows; ++dr) {
      if (InShape(f, dr, dc)) fn(f.row0 + dr, f.col0 + dc);
    }
  }
}

int DeathFrame(const ObjectSpec& o, int frames) {
  return o.death_frame < 0 ? frames - 1 : std::min(o.death_frame, frames - 1);
}

bool Alive(const ObjectSpec& o, int frame, int frames) {
  return frame >= o.birth_frame && frame <= DeathFrame(o, frames);
}

Footprint FootprintAt(const ObjectSpec& o, int frame) {
  const int dt = frame - o.birth_frame;
  return {o.start_row + o.velocity_rows * dt,
          o.start_col + o.velocity_cols * dt, o.size_rows, o.size_cols,
          o.shape};
}

// Grows (radius > 0) or shrinks (radius < 0) a pixel set with a square
// structuring element, then shifts it. Works on the bounding box only.
RleMask Jitter(const RleMask& mask, int shift_rows, int shift_cols,
               int radius) {
  const int h = mask.height();
  const int w = mask.width();
  const BoundingBox& bb = mask.bbox();
  const int pad = std::abs(radius) + 1;
  const int r0 = bb.row_min - pad;
  const int c0 = bb.col_min - pad;
  const int lh = bb.row_max - bb.row_min + 1 + 2 * pad;
  const int lw = bb.col_max - bb.col_min + 1 + 2 * pad;
  std::vector<uint8_t> grid(static_cast<size_t>(lh) * lw, 0);
  for (uint32_t p : ForegroundIndices(mask)) {
    const int r = static_cast<int>(p % h) - r0;
    const int c = static_cast<int>(p / h) - c0;
    grid[static_cast<size_t>(r) * lw + c] = 1;
  }
  const bool grow = radius > 0;
  for (int step = 0; step < std::abs(radius); ++step) {
    std::vector<uint8_t> next(grid.size(), 0);
    for (int r = 0; r < lh; ++r) {
      for (int c = 0; c < lw; ++c) {
        bool any = false;
        bool all = true;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = r + dr;
            const int cc = c + dc;
            const bool v = rr >= 0 && rr < lh && cc >= 0 && cc < lw &&
                           grid[static_cast<size_t>(rr) * lw + cc];
            any = any || v;
            all = all && v;
          }
        }
        next[static_cast<size_t>(r) * lw + c] = (grow ? any : all) ? 1 : 0;
      }
    }
    grid = std::move(next);
  }
  std::vector<uint32_t> out;
  for (int r = 0; r < lh; ++r) {
    for (int c = 0; c < lw; ++c) {
      if (!grid[static_cast<size_t>(r) * lw + c]) continue;
      const int gr = r + r0 + shift_rows;
      const int gc = c + c0 + shift_cols;
      if (gr >= 0 && gr < h && gc >= 0 && gc < w) {
        out.push_back(static_cast<uint32_t>(gc) * h + gr);
      }
    }
  }
  return RleFromIndices(h, w, std::move(out));
}

}  // namespace

uint64_t SplitMix64(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + (stream + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int64_t SceneRng::Int(int64_t lo, int64_t hi) {
  if (hi < lo) throw InvariantError("empty integer range");
  const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<int64_t>(Next());
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % span;
  uint64_t x = Next();
  while (x >= limit) x = Next();
  return lo + static_cast<int64_t>(x % span);
}

Scene GenerateScene(const SceneSpec& spec) {
  if (spec.frames < 1) throw InputError("scene needs at least one frame");
  if (spec.height < 1 || spec.width < 1) {
    throw InputError("scene canvas must be positive");
  }
  for (const auto& o : spec.objects) {
    if (o.size_rows < 1 || o.size_cols < 1) {
      throw InputError("scene object has zero area");
    }
  }
  const int h = spec.height;
  const int w = spec.width;
  const int n = static_cast<int>(spec.objects.size());

  Scene scene;
  scene.height = h;
  scene.width = w;
  scene.frames = spec.frames;
  scene.masks.assign(n, std::vector<std::optional<RleMask>>(spec.frames));
  scene.fully_visible.assign(n, std::vector<bool>(spec.frames, false));

  std::vector<int> owner(static_cast<size_t>(h) * w);
  for (int t = 0; t < spec.frames; ++t) {
    std::fill(owner.begin(), owner.end(), -1);
    std::vector<int64_t> footprint_area(n, 0);
    std::vector<bool> inside(n, true);
    for (int i = 0; i < n; ++i) {
      const auto& o = spec.objects[i];
      if (!Alive(o, t, spec.frames)) continue;
      ForEachShapePixel(FootprintAt(o, t), [&](int r, int c) {
        ++footprint_area[i];
        if (r < 0 || r >= h || c < 0 || c >= w) {
          inside[i] = false;
          return;
        }
        owner[static_cast<size_t>(r) * w + c] = i;
      });
    }

    std::vector<std::vector<uint32_t>> pixels(n);
    FlowField flow(h, w);
    for (int c = 0; c < w; ++c) {
      for (int r = 0; r < h; ++r) {
        const int i = owner[static_cast<size_t>(r) * w + c];
        if (i < 0) continue;
        pixels[i].push_back(static_cast<uint32_t>(c) * h + r);
        flow.Set(r, c, static_cast<float>(spec.objects[i].velocity_cols),
                 static_cast<float>(spec.objects[i].velocity_rows));
      }
    }
    for (int i = 0; i < n; ++i) {
      if (pixels[i].empty()) continue;
      const auto visible = static_cast<int64_t>(pixels[i].size());
      scene.fully_visible[i][t] = inside[i] && visible == footprint_area[i];
      scene.masks[i][t] = RleFromIndices(h, w, std::move(pixels[i]));
    }
    if (t + 1 < spec.frames) scene.flows.push_back(std::move(flow));
  }

  scene.gt_tracks.video_length = spec.frames;
  scene.gt_tracks.height = h;
  scene.gt_tracks.width = w;
  for (int i = 0; i < n; ++i) {
    const auto& m = scene.masks[i];
    if (std::none_of(m.begin(), m.end(),
                     [](const auto& x) { return x.has_value(); })) {
      continue;
    }
    scene.gt_tracks.tracks.push_back(Track{i, 1.0, m});
  }
  return scene;
}

std::vector<std::vector<Detection>> PerturbProposals(const Scene& scene,
                                                     const NoiseSpec& noise,
                                                     uint64_t seed) {
  const int h = scene.height;
  const int w = scene.width;
  const int j = std::max(noise.jitter_px, 0);
  std::vector<std::vector<Detection>> frames(scene.frames);
  for (int t = 0; t < scene.frames; ++t) {
    SceneRng rng(seed, static_cast<uint64_t>(t));
    auto& dets = frames[t];
    for (const auto& object_masks : scene.masks) {
      const auto& gt = object_masks[t];
      if (!gt) continue;
      if (rng.Bernoulli(noise.drop_prob)) continue;
      RleMask mask = *gt;
      if (j > 0) {
        const int shift_rows = static_cast<int>(rng.Int(-j, j));
        const int shift_cols = static_cast<int>(rng.Int(-j, j));
        const int radius = static_cast<int>(rng.Int(-j, j));
        mask = Jitter(mask, shift_rows, shift_cols, radius);
        if (mask.area() == 0) continue;
      }
      const double score = 1.0 - noise.score_jitter * rng.Uniform();
      dets.push_back(Detection{std::move(mask), score, t, 0});
    }
    for (int k = 0; k < noise.false_positives_per_frame; ++k) {
      Footprint f;
      f.shape = rng.Int(0, 1) == 0 ? Shape::kRectangle : Shape::kEllipse;
      f.rows = static_cast<int>(rng.Int(8, std::max(8, std::min(48, h))));
      f.cols = static_cast<int>(rng.Int(8, std::max(8, std::min(48, w))));
      f.row0 = static_cast<int>(rng.Int(-f.rows / 2, h - f.rows / 2));
      f.col0 = static_cast<int>(rng.Int(-f.cols / 2, w - f.cols / 2));
      std::vector<uint32_t> px;
      ForEachShapePixel(f, [&](int r, int c) {
        if (r >= 0 && r < h && c >= 0 && c < w) {
          px.push_back(static_cast<uint32_t>(c) * h + r);
        }
      });
      const double score =
          noise.fp_score_min +
          (noise.fp_score_max - noise.fp_score_min) * rng.Uniform();
      if (px.empty()) continue;
      dets.push_back(
          Detection{RleFromIndices(h, w, std::move(px)), score, t, 0});
    }
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) {
                       return a.score > b.score;
                     });
    for (size_t i = 0; i < dets.size(); ++i) {
      dets[i].source_index = static_cast<int>(i);
    }
  }
  return frames;
}

SceneSpec RandomSceneSpec(const RandomSceneParams& params, uint64_t seed) {
  if (params.frames < 1 || params.height < 1 || params.width < 1 ||
      params.min_size < 1 || params.max_size < params.min_size ||
      params.max_speed < 0 || params.objects < 0) {
    throw InputError("invalid random scene parameters");
  }
  SceneSpec spec;
  spec.height = params.height;
  spec.width = params.width;
  spec.frames = params.frames;
  spec.seed = seed;
  SceneRng rng(seed, 0x5ce7e5ULL);
  const int last = params.frames - 1;

  auto box_at = [](const ObjectSpec& o, int t) {
    return BoundingBox{false, o.start_row + o.velocity_rows * t,
                       o.start_row + o.velocity_rows * t + o.size_rows - 1,
                       o.start_col + o.velocity_cols * t,
                       o.start_col + o.velocity_cols * t + o.size_cols - 1};
  };

  constexpr int kMaxAttempts = 20000;
  int attempts = 0;
  while (static_cast<int>(spec.objects.size()) < params.objects) {
    if (++attempts > kMaxAttempts) {
      throw InputError("could not place " + std::to_string(params.objects) +
                       " objects on the canvas");
    }
    ObjectSpec o;
    o.shape = rng.Int(0, 1) == 0 ? Shape::kRectangle : Shape::kEllipse;
    o.size_rows = static_cast<int>(rng.Int(params.min_size, params.max_size));
    o.size_cols = static_cast<int>(rng.Int(params.min_size, params.max_size));
    o.velocity_rows =
        static_cast<int>(rng.Int(-params.max_speed, params.max_speed));
    o.velocity_cols =
        static_cast<int>(rng.Int(-params.max_speed, params.max_speed));
    // Keep the whole footprint on the canvas at every frame.
    const int row_lo = std::max(0, -o.velocity_rows * last);
    const int row_hi = std::min(params.height - o.size_rows,
                                params.height - o.size_rows -
                                    o.velocity_rows * last);
    const int col_lo = std::max(0, -o.velocity_cols * last);
    const int col_hi = std::min(params.width - o.size_cols,
                                params.width - o.size_cols -
                                    o.velocity_cols * last);
    if (row_lo > row_hi || col_lo > col_hi) continue;
    o.start_row = static_cast<int>(rng.Int(row_lo, row_hi));
    o.start_col = static_cast<int>(rng.Int(col_lo, col_hi));
    o.birth_frame = 0;
    o.death_frame = -1;

    bool clash = false;
    if (params.non_overlapping) {
      for (const auto& other : spec.objects) {
        for (int t = 0; t <= last && !clash; ++t) {
          clash = box_at(o, t).Intersects(box_at(other, t));
        }
        if (clash) break;
      }
    }
    if (!clash) spec.objects.push_back(o);
  }
  return spec;
}

nlohmann::json ProposalsToJson(
    const std::string& video_id, int height, int width,
    const std::vector<std::vector<Detection>>& proposals) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& frame : proposals) {
    nlohmann::json dets = nlohmann::json::array();
    for (const auto& d : frame) {
      dets.push_back({{"segmentation", RleToJson(d.mask)}, {"score", d.score}});
    }
    frames.push_back(std::move(dets));
  }
  return {{"video_id", video_id},
          {"height", height},
          {"width", width},
          {"length", proposals.size()},
          {"frames", std::move(frames)}};
}

void WriteSceneFiles(const Scene& scene,
                     const std::vector<std::vector<Detection>>& proposals,
                     const std::string& video_id,
                     const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "flows", ec);
  if (ec) throw InputError("cannot create " + (dir / "flows").string());
  WriteFileAtomic(
      dir / "proposals.json",
      ProposalsToJson(video_id, scene.height, scene.width, proposals).dump() +
          "\n");
  for (size_t t = 0; t < scene.flows.size(); ++t) {
    WriteFloFile(scene.flows[t],
                 dir / "flows" / FloFileName(static_cast<int>(t)));
  }
  WriteResults(MakeResultDocument({{video_id, scene.gt_tracks}}),
               dir / "gt.json");
}

}  // namespace flowmatch
