#pragma once

#include <filesystem>
#include <vector>

#include "dynrf/dataset.hpp"
#include "dynrf/rng.hpp"

namespace dynrf::data {

// Analytic dynamic scene: a static textured wall (soft gaussian slab in z)
// plus one emissive gaussian blob circling in a constant-z plane. Everything
// end-to-end is verified against dense quadrature of these closed-form
// fields.
struct SynthSceneSpec {
  int width = 48;
  int height = 48;
  int frames = 16;

  double focal = 0.92;  // fx = fy = focal * width
  double znear = 2.0;
  double zfar = 5.5;

  Vec3 blob_center{0.0, 0.0, 3.0};
  double blob_path_radius = 0.5;
  double blob_radius = 0.35;  // gaussian sigma
  double blob_density = 40.0;
  Vec3 blob_color{0.90, 0.35, 0.25};

  double wall_z = 4.0;
  double wall_thickness = 0.35;  // gaussian sigma
  double wall_density = 12.0;
  Vec3 texture_base{0.50, 0.50, 0.50};
  Vec3 texture_amp{0.35, 0.30, 0.25};
  Vec3 texture_freq{1.3, 1.1, 0.9};

  double mask_opacity_threshold = 0.5;
  double corruption_fraction = 0.1;
  double corruption_amplitude = 1.0;
  int oracle_samples = 1024;
  bool zero_based_times = false;
  uint64_t seed = 7;

  render::Camera make_camera() const;
  void validate() const;

  Vec3 blob_position(double t) const;
  double blob_field(const Vec3& x, double t) const;
  double wall_field(const Vec3& x) const;
  double density(const Vec3& x, double t) const;
  Vec3 color(const Vec3& x, double t) const;
};

// All keys optional; missing ones keep the defaults above.
SynthSceneSpec load_scene_spec(const std::filesystem::path& path);

struct OracleFrame {
  Image image;
  GridD depth;
  GridD blob_opacity;  // 1 - exp(-integral of the blob term); drives the mask
};

// Dense midpoint quadrature of the analytic fields, written directly from
// the weight formula. Independent of the render module on purpose: it is the
// ground truth the engine's quadrature is checked against.
OracleFrame oracle_render(const SynthSceneSpec& spec, const render::Camera& camera, double t,
                          int dense_m);

struct SynthResult {
  Dataset dataset;                  // images, (possibly corrupted) depths, masks
  std::vector<GridD> oracle_depth;  // uncorrupted depths, one per frame
};

// Renders every frame through the oracle, thresholds the blob footprint into
// tool masks, and corrupts exactly ceil(fraction * W * H) random depth pixels
// per frame by at least amplitude/2.
SynthResult synth_scene(const SynthSceneSpec& spec, Rng& rng);

}  // namespace dynrf::data
