#pragma once

#include <filesystem>
#include <optional>

#include "dynrf/camera.hpp"
#include "dynrf/fields.hpp"

namespace dynrf {

// Self-contained training snapshot: the field model with its encoding
// configuration, the camera it was trained with, the sample count renders
// default to, and (optionally) the optimizer state.
//
// Binary layout, all little-endian:
//   magic "DRFC", u32 version (1)
//   u32 levels_position, levels_direction, levels_time; u8 include_input
//   camera: f64 fx,fy,cx,cy; u32 width,height; f64 near,far; f64 pose[12]
//   u32 samples_per_ray
//   two nets (theta, phi), each:
//     u32 layer_count; i32 skip_layer; u32 skip_dim
//     per layer: u32 in, out; u8 activation; f64 weights (row-major); f64 biases
//   u8 has_adam; when set, per net:
//     u64 step; f64 lr, beta1, beta2, eps; moments m then v (layer layout)
struct Checkpoint {
  fields::FieldModel model;
  render::Camera camera;
  int samples_per_ray = 32;
  std::optional<nn::AdamState> theta_adam;
  std::optional<nn::AdamState> phi_adam;
};

// Writes to a temporary sibling and renames, so a failed save never leaves a
// truncated checkpoint behind.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dynrf
