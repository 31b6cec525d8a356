#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace dynrf {

using Vec3 = Eigen::Vector3d;

// Row-major 2D grid of scalars (depth maps, residuals, masks).
template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, T fill = T{}) : width(w), height(h), data(size_t(w) * size_t(h), fill) {}

  T& at(int x, int y) { return data[size_t(y) * width + x]; }
  const T& at(int x, int y) const { return data[size_t(y) * width + x]; }

  bool empty() const { return data.empty(); }
  size_t size() const { return data.size(); }

  bool same_shape(const Grid& other) const {
    return width == other.width && height == other.height;
  }
};

using GridD = Grid<double>;
using GridU8 = Grid<uint8_t>;

// H x W RGB image, interleaved channels, values nominally in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // 3 * width * height

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), data(3 * size_t(w) * size_t(h), fill) {}

  double* px(int x, int y) { return &data[3 * (size_t(y) * width + x)]; }
  const double* px(int x, int y) const { return &data[3 * (size_t(y) * width + x)]; }

  Vec3 color(int x, int y) const {
    const double* p = px(x, y);
    return Vec3(p[0], p[1], p[2]);
  }
  void set_color(int x, int y, const Vec3& c) {
    double* p = px(x, y);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  bool empty() const { return data.empty(); }
  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height;
  }
};

}  // namespace dynrf
