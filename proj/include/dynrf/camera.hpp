#pragma once

#include <Eigen/Dense>
#include <filesystem>

#include "dynrf/grid.hpp"

namespace dynrf::render {

// Pinhole camera with a rigid camera-to-world pose. near/far bound the ray
// parameter s, which by convention equals camera-frame z (see Ray).
struct Camera {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
  double znear = 0, zfar = 0;
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();  // camera-to-world
  Vec3 trans = Vec3::Zero();                          // camera center in world

  void validate() const;
};

// JSON document with keys fx, fy, cx, cy, width, height, near, far and
// pose (12 reals, row-major 3x4 [R|t]).
Camera load_camera(const std::filesystem::path& path);
void save_camera(const Camera& camera, const std::filesystem::path& path);

}  // namespace dynrf::render
