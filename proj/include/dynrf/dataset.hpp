#pragma once

#include <filesystem>
#include <vector>

#include "dynrf/camera.hpp"
#include "dynrf/grid.hpp"
#include "dynrf/refine.hpp"

namespace dynrf::data {

// One time step: rgb image, coarse depth, tool mask (may be empty when the
// dataset carries none) and the normalized time stamp.
struct Frame {
  Image image;
  GridD depth;
  refine::Mask mask;
  double t = 0.0;
  int index = 0;  // 1-based
};

struct Dataset {
  std::vector<Frame> frames;
  render::Camera camera;
  bool has_masks = false;

  int frame_count() const { return int(frames.size()); }
  void validate() const;
};

// Frame i (1-based) gets t = i/T by default; the alternative spans [0,1]
// as (i-1)/(T-1).
double frame_time(int index, int total, bool zero_based);

// Directory layout:
//   camera.json
//   images/%06d.png   8-bit RGB
//   depth/%06d.pfm    32-bit float, grayscale
//   masks/%06d.png    8-bit, nonzero = tool   (optional)
//   boxes.json        per-frame [u0,v0,u1,v1] prompts (optional fallback)
// Frames are numbered 1..T contiguously. When masks/ is absent but
// boxes.json exists, rectangle masks are built from the prompts.
Dataset load_dataset(const std::filesystem::path& dir, bool require_masks = true,
                     bool zero_based_times = false);

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

}  // namespace dynrf::data
