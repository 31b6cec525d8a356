#include "dynrf/cloud.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dynrf::cloud {

PointCloud backproject(const Image& image, const GridD& depth, const render::Camera& camera) {
  if (image.width != depth.width || image.height != depth.height)
    throw std::invalid_argument("backproject: image and depth dimensions disagree");

  PointCloud cloud;
  cloud.points.reserve(depth.size());
  for (int v = 0; v < image.height; ++v) {
    for (int u = 0; u < image.width; ++u) {
      const double z = depth.at(u, v);
      if (!(z > 0.0)) continue;  // vacuum pixels carry no geometry
      const Vec3 cam_point(z * (u + 0.5 - camera.cx) / camera.fx,
                           z * (v + 0.5 - camera.cy) / camera.fy, z);
      const Vec3 world = camera.rot * cam_point + camera.trans;
      const double* c = image.px(u, v);
      auto q = [](double x) {
        return uint8_t(std::lround(std::min(1.0, std::max(0.0, x)) * 255.0));
      };
      cloud.points.push_back(
          {float(world.x()), float(world.y()), float(world.z()), q(c[0]), q(c[1]), q(c[2])});
    }
  }
  return cloud;
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("ply: cannot write " + path.string());
  out << "ply\n"
      << "format binary_little_endian 1.0\n"
      << "element vertex " << cloud.points.size() << "\n"
      << "property float x\n"
      << "property float y\n"
      << "property float z\n"
      << "property uchar red\n"
      << "property uchar green\n"
      << "property uchar blue\n"
      << "end_header\n";
  for (const Point& p : cloud.points) {
    char buf[15];
    std::memcpy(buf, &p.x, 4);
    std::memcpy(buf + 4, &p.y, 4);
    std::memcpy(buf + 8, &p.z, 4);
    buf[12] = char(p.r);
    buf[13] = char(p.g);
    buf[14] = char(p.b);
    out.write(buf, sizeof(buf));
  }
  if (!out) throw std::runtime_error("ply: write failed for " + path.string());
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ply: cannot open " + path.string());

  std::string line;
  size_t vertex_count = 0;
  bool binary_le = false;
  std::vector<std::string> properties;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (word == "element") {
      std::string name;
      ls >> name >> vertex_count;
      if (name != "vertex") throw std::runtime_error("ply: unsupported element " + name);
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      properties.push_back(type + " " + name);
    }
  }
  const std::vector<std::string> expected = {"float x",   "float y",    "float z",
                                             "uchar red", "uchar green", "uchar blue"};
  if (!binary_le || properties != expected)
    throw std::runtime_error("ply: unsupported layout in " + path.string());

  PointCloud cloud;
  cloud.points.resize(vertex_count);
  for (Point& p : cloud.points) {
    char buf[15];
    in.read(buf, sizeof(buf));
    if (!in) throw std::runtime_error("ply: truncated data in " + path.string());
    std::memcpy(&p.x, buf, 4);
    std::memcpy(&p.y, buf + 4, 4);
    std::memcpy(&p.z, buf + 8, 4);
    p.r = uint8_t(buf[12]);
    p.g = uint8_t(buf[13]);
    p.b = uint8_t(buf[14]);
  }
  return cloud;
}

}  // namespace dynrf::cloud
