#include "dynrf/synth.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "dynrf/io_image.hpp"

namespace dynrf::data {

render::Camera SynthSceneSpec::make_camera() const {
  render::Camera cam;
  cam.fx = cam.fy = focal * width;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.width = width;
  cam.height = height;
  cam.znear = znear;
  cam.zfar = zfar;
  return cam;
}

void SynthSceneSpec::validate() const {
  if (width < 2 || height < 2 || frames < 1) throw std::invalid_argument("synth: bad dimensions");
  if (!(znear > 0.0 && znear < zfar)) throw std::invalid_argument("synth: bad depth range");
  if (blob_radius <= 0.0 || wall_thickness <= 0.0 || blob_density < 0.0 || wall_density < 0.0)
    throw std::invalid_argument("synth: bad field parameters");
  if (!(corruption_fraction >= 0.0 && corruption_fraction <= 1.0))
    throw std::invalid_argument("synth: corruption fraction outside [0,1]");
  if (oracle_samples < 1024) throw std::invalid_argument("synth: oracle_samples must be >= 1024");

  // The blob (with a 2-sigma margin) must stay inside the frustum at every
  // frame time.
  const render::Camera cam = make_camera();
  for (int i = 1; i <= frames; ++i) {
    const Vec3 p = blob_position(frame_time(i, frames, zero_based_times));
    const double margin = 2.0 * blob_radius;
    if (p.z() - margin < znear || p.z() + margin > zfar)
      throw std::invalid_argument("synth: blob leaves the depth range");
    const double u_extent = std::abs(p.x()) + margin;
    const double v_extent = std::abs(p.y()) + margin;
    if (u_extent / p.z() * cam.fx > cam.cx || v_extent / p.z() * cam.fy > cam.cy)
      throw std::invalid_argument("synth: blob leaves the camera frustum");
  }
}

Vec3 SynthSceneSpec::blob_position(double t) const {
  const double angle = 2.0 * M_PI * t;
  return blob_center + blob_path_radius * Vec3(std::cos(angle), std::sin(angle), 0.0);
}

double SynthSceneSpec::blob_field(const Vec3& x, double t) const {
  const double r2 = (x - blob_position(t)).squaredNorm();
  return blob_density * std::exp(-r2 / (2.0 * blob_radius * blob_radius));
}

double SynthSceneSpec::wall_field(const Vec3& x) const {
  const double dz = x.z() - wall_z;
  return wall_density * std::exp(-dz * dz / (2.0 * wall_thickness * wall_thickness));
}

double SynthSceneSpec::density(const Vec3& x, double t) const {
  return blob_field(x, t) + wall_field(x);
}

Vec3 SynthSceneSpec::color(const Vec3& x, double t) const {
  const double sb = blob_field(x, t);
  const double sw = wall_field(x);
  const Vec3 wall_color(
      texture_base.x() + texture_amp.x() * std::sin(texture_freq.x() * (x.x() + 0.3)),
      texture_base.y() + texture_amp.y() * std::sin(texture_freq.y() * (x.y() - 0.2)),
      texture_base.z() + texture_amp.z() * std::sin(texture_freq.z() * (x.x() + x.y())));
  return (sb * blob_color + sw * wall_color) / (sb + sw + 1e-12);
}

SynthSceneSpec load_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("synth: cannot open spec " + path.string());
  nlohmann::json j;
  in >> j;

  SynthSceneSpec spec;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  auto get_vec3 = [&](const char* key, Vec3& field) {
    if (j.contains(key)) {
      auto v = j.at(key).get<std::vector<double>>();
      if (v.size() != 3) throw std::runtime_error(std::string("synth: ") + key + " needs 3 reals");
      field = Vec3(v[0], v[1], v[2]);
    }
  };
  get("width", spec.width);
  get("height", spec.height);
  get("frames", spec.frames);
  get("focal", spec.focal);
  get("near", spec.znear);
  get("far", spec.zfar);
  get_vec3("blob_center", spec.blob_center);
  get("blob_path_radius", spec.blob_path_radius);
  get("blob_radius", spec.blob_radius);
  get("blob_density", spec.blob_density);
  get_vec3("blob_color", spec.blob_color);
  get("wall_z", spec.wall_z);
  get("wall_thickness", spec.wall_thickness);
  get("wall_density", spec.wall_density);
  get_vec3("texture_base", spec.texture_base);
  get_vec3("texture_amp", spec.texture_amp);
  get_vec3("texture_freq", spec.texture_freq);
  get("mask_opacity_threshold", spec.mask_opacity_threshold);
  get("corruption_fraction", spec.corruption_fraction);
  get("corruption_amplitude", spec.corruption_amplitude);
  get("oracle_samples", spec.oracle_samples);
  get("zero_based_times", spec.zero_based_times);
  get("seed", spec.seed);
  spec.validate();
  return spec;
}

OracleFrame oracle_render(const SynthSceneSpec& spec, const render::Camera& camera, double t,
                          int dense_m) {
  if (dense_m < 1024) throw std::invalid_argument("oracle_render: dense_m must be >= 1024");

  OracleFrame out;
  out.image = Image(camera.width, camera.height);
  out.depth = GridD(camera.width, camera.height);
  out.blob_opacity = GridD(camera.width, camera.height);

  const double h = (camera.zfar - camera.znear) / dense_m;
  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      const Vec3 dir_cam((u + 0.5 - camera.cx) / camera.fx, (v + 0.5 - camera.cy) / camera.fy, 1.0);
      const Vec3 march = camera.rot * dir_cam;
      const Vec3 origin = camera.trans;

      double trans = 1.0;
      Vec3 color = Vec3::Zero();
      double depth = 0.0;
      double blob_integral = 0.0;
      for (int j = 0; j < dense_m - 1; ++j) {
        const double s = camera.znear + (j + 0.5) * h;
        const Vec3 x = origin + s * march;
        const double sigma = spec.density(x, t);
        const double w = trans * (1.0 - std::exp(-sigma * h));
        color += w * spec.color(x, t);
        depth += w * s;
        trans *= std::exp(-sigma * h);
        blob_integral += spec.blob_field(x, t) * h;
      }
      out.image.set_color(u, v, color);
      out.depth.at(u, v) = depth;
      out.blob_opacity.at(u, v) = 1.0 - std::exp(-blob_integral);
    }
  }
  return out;
}

SynthResult synth_scene(const SynthSceneSpec& spec, Rng& rng) {
  spec.validate();

  SynthResult result;
  result.dataset.camera = spec.make_camera();
  result.dataset.has_masks = true;

  const int pixels = spec.width * spec.height;
  const int corrupt_count = int(std::ceil(spec.corruption_fraction * double(pixels)));

  for (int i = 1; i <= spec.frames; ++i) {
    const double t = frame_time(i, spec.frames, spec.zero_based_times);
    OracleFrame oracle = oracle_render(spec, result.dataset.camera, t, spec.oracle_samples);
    io::snap_to_float(oracle.depth);

    Frame frame;
    frame.index = i;
    frame.t = t;
    frame.image = std::move(oracle.image);
    frame.depth = oracle.depth;
    frame.mask = refine::Mask(spec.width, spec.height, 0);
    for (int p = 0; p < pixels; ++p)
      frame.mask.data[p] = oracle.blob_opacity.data[p] >= spec.mask_opacity_threshold ? 1 : 0;

    if (corrupt_count > 0) {
      // Partial Fisher-Yates draw of distinct pixels; offsets of at least
      // amplitude/2 guarantee every chosen pixel actually changes.
      std::vector<int> order(pixels);
      std::iota(order.begin(), order.end(), 0);
      for (int k = 0; k < corrupt_count; ++k) {
        const int pick = k + int(rng.next_below(uint64_t(pixels - k)));
        std::swap(order[k], order[pick]);
        const int p = order[k];
        const double magnitude = spec.corruption_amplitude * (0.5 + rng.next_double());
        const double sign = rng.next_double() < 0.5 ? -1.0 : 1.0;
        double corrupted = frame.depth.data[p] + sign * magnitude;
        corrupted = std::min(spec.zfar, std::max(0.5 * spec.znear, corrupted));
        frame.depth.data[p] = double(float(corrupted));
      }
    }

    result.oracle_depth.push_back(std::move(oracle.depth));
    result.dataset.frames.push_back(std::move(frame));
  }

  result.dataset.validate();
  return result;
}

}  // namespace dynrf::data
