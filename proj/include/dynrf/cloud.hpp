#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dynrf/camera.hpp"
#include "dynrf/grid.hpp"

namespace dynrf::cloud {

struct Point {
  float x, y, z;
  uint8_t r, g, b;
};

struct PointCloud {
  std::vector<Point> points;
};

// Lifts every pixel with depth > 0 to world space. Depth is camera-frame z
// (the renderer's ray parameter), so the lift is the exact inverse of the
// pixel projection.
PointCloud backproject(const Image& image, const GridD& depth, const render::Camera& camera);

// Binary little-endian PLY: float x,y,z then uchar red,green,blue.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud read_ply(const std::filesystem::path& path);

}  // namespace dynrf::cloud
