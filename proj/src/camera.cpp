#include "dynrf/camera.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace dynrf::render {

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("camera: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera: bad resolution");
  if (!(znear > 0.0) || !(znear < zfar)) throw std::invalid_argument("camera: need 0 < near < far");
  Eigen::Matrix3d should_be_identity = rot.transpose() * rot;
  if ((should_be_identity - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("camera: rotation is not orthonormal");
}

Camera load_camera(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("camera: cannot open " + path.string());
  nlohmann::json j;
  in >> j;

  Camera cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  cam.znear = j.at("near").get<double>();
  cam.zfar = j.at("far").get<double>();
  auto pose = j.at("pose").get<std::vector<double>>();
  if (pose.size() != 12) throw std::runtime_error("camera: pose must hold 12 reals");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) cam.rot(r, c) = pose[r * 4 + c];
    cam.trans[r] = pose[r * 4 + 3];
  }
  cam.validate();
  return cam;
}

void save_camera(const Camera& camera, const std::filesystem::path& path) {
  camera.validate();
  std::vector<double> pose(12);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) pose[r * 4 + c] = camera.rot(r, c);
    pose[r * 4 + 3] = camera.trans[r];
  }
  nlohmann::json j{{"fx", camera.fx},       {"fy", camera.fy},     {"cx", camera.cx},
                   {"cy", camera.cy},       {"width", camera.width}, {"height", camera.height},
                   {"near", camera.znear},  {"far", camera.zfar},  {"pose", pose}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("camera: cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace dynrf::render
