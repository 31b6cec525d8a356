#include "dynrf/render.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dynrf/parallel.hpp"

namespace dynrf::render {

Ray pixel_ray(const Camera& camera, double u, double v) {
  if (!(u >= 0.0 && u < camera.width && v >= 0.0 && v < camera.height))
    throw std::invalid_argument("pixel_ray: pixel (" + std::to_string(u) + "," +
                                std::to_string(v) + ") outside image");
  const Vec3 dir_cam((u + 0.5 - camera.cx) / camera.fx, (v + 0.5 - camera.cy) / camera.fy, 1.0);
  Ray ray;
  ray.march = camera.rot * dir_cam;
  ray.dir = ray.march.normalized();
  ray.origin = camera.trans;
  ray.znear = camera.znear;
  ray.zfar = camera.zfar;
  return ray;
}

std::vector<double> stratified_samples(const Ray& ray, int m, Rng* rng) {
  if (m < 2) throw std::invalid_argument("stratified_samples: need m >= 2");
  std::vector<double> s(m);
  const double h = (ray.zfar - ray.znear) / m;
  for (int j = 0; j < m; ++j) {
    const double jitter = rng ? rng->next_double() : 0.5;
    s[j] = ray.znear + (j + jitter) * h;
  }
  return s;
}

Eigen::VectorXd render_weights(const Eigen::VectorXd& densities, const Eigen::VectorXd& deltas) {
  const int n = int(densities.size());
  if (deltas.size() != n) throw std::invalid_argument("render_weights: length mismatch");
  Eigen::VectorXd w(n);
  double trans = 1.0;
  for (int j = 0; j < n; ++j) {
    if (densities[j] < 0.0) throw std::invalid_argument("render_weights: negative density");
    if (!(deltas[j] > 0.0)) throw std::invalid_argument("render_weights: non-positive delta");
    const double q = densities[j] * deltas[j];
    const double alpha = -std::expm1(-q);
    w[j] = trans * alpha;
    trans *= std::exp(-q);
  }
  return w;
}

void render_color_depth(const Eigen::VectorXd& weights, const Eigen::MatrixXd& colors,
                        const std::vector<double>& s_values, Vec3& color, double& depth) {
  const int n = int(weights.size());
  if (colors.rows() != n || int(s_values.size()) != n + 1)
    throw std::invalid_argument("render_color_depth: length mismatch");
  color.setZero();
  depth = 0.0;
  for (int j = 0; j < n; ++j) {
    color += weights[j] * colors.row(j).transpose();
    depth += weights[j] * s_values[j];
  }
}

BundleForward render_bundle(const fields::FieldModel& model, const std::vector<Ray>& rays,
                            const std::vector<double>& times, int m, Rng* rng, bool with_tape) {
  const int n_rays = int(rays.size());
  if (int(times.size()) != n_rays) throw std::invalid_argument("render_bundle: times mismatch");
  if (m < 2) throw std::invalid_argument("render_bundle: need m >= 2");
  const int n_pts = n_rays * (m - 1);

  BundleForward b;
  b.n_rays = n_rays;
  b.m = m;
  b.s_values.resize(size_t(n_rays) * m);
  b.deltas.resize(n_pts);

  Eigen::MatrixXd points(n_pts, 3);
  Eigen::MatrixXd dirs(n_pts, 3);
  Eigen::VectorXd ts(n_pts);
  for (int r = 0; r < n_rays; ++r) {
    const Ray& ray = rays[r];
    std::vector<double> s = stratified_samples(ray, m, rng);
    std::copy(s.begin(), s.end(), b.s_values.begin() + size_t(r) * m);
    for (int j = 0; j < m - 1; ++j) {
      const int i = r * (m - 1) + j;
      points.row(i) = (ray.origin + s[j] * ray.march).transpose();
      dirs.row(i) = ray.dir.transpose();
      ts[i] = times[r];
      b.deltas[i] = s[j + 1] - s[j];
    }
  }

  b.query = fields::dynamic_query_batch(model, points, dirs, ts, with_tape);

  b.alphas.resize(n_pts);
  b.trans.resize(n_pts);
  b.weights.resize(n_pts);
  b.colors.resize(n_rays, 3);
  b.depths.resize(n_rays);
  for (int r = 0; r < n_rays; ++r) {
    double trans = 1.0;
    Vec3 color = Vec3::Zero();
    double depth = 0.0;
    for (int j = 0; j < m - 1; ++j) {
      const int i = r * (m - 1) + j;
      const double q = b.query.sigmas[i] * b.deltas[i];
      const double alpha = -std::expm1(-q);
      b.alphas[i] = alpha;
      b.trans[i] = trans;
      const double w = trans * alpha;
      b.weights[i] = w;
      color += w * b.query.colors.row(i).transpose();
      depth += w * b.s_values[size_t(r) * m + j];
      trans *= std::exp(-q);
    }
    b.colors.row(r) = color.transpose();
    b.depths[r] = depth;
  }
  return b;
}

void render_bundle_backward(const fields::FieldModel& model, const BundleForward& b,
                            const Eigen::MatrixXd& d_colors, const Eigen::VectorXd& d_depths,
                            nn::Gradients& theta_grads, nn::Gradients& phi_grads) {
  const int n_rays = b.n_rays;
  const int m = b.m;
  if (d_colors.rows() != n_rays || d_depths.size() != n_rays)
    throw std::invalid_argument("render_bundle_backward: grad shape mismatch");
  const int n_pts = n_rays * (m - 1);

  Eigen::MatrixXd d_point_colors(n_pts, 3);
  Eigen::VectorXd d_sigmas(n_pts);
  for (int r = 0; r < n_rays; ++r) {
    const Vec3 dc = d_colors.row(r).transpose();
    const double dd = d_depths[r];
    // dw_j = <dC, c_j> + dD * s_j; then through w_j = alpha_j * T_j:
    //   dq_j = dw_j * T_j (1 - alpha_j) - sum_{k>j} dw_k w_k.
    double suffix = 0.0;
    for (int j = m - 2; j >= 0; --j) {
      const int i = r * (m - 1) + j;
      d_point_colors.row(i) = (b.weights[i] * dc).transpose();
      const double dw = dc.dot(b.query.colors.row(i).transpose()) + dd * b.s_values[size_t(r) * m + j];
      const double dq = dw * b.trans[i] * (1.0 - b.alphas[i]) - suffix;
      d_sigmas[i] = dq * b.deltas[i];
      suffix += dw * b.weights[i];
    }
  }

  fields::dynamic_query_backward(model, b.query, d_point_colors, d_sigmas, theta_grads, phi_grads);
}

RenderSample render_ray(const fields::FieldModel& model, const Ray& ray, double t, int m,
                        Rng* rng) {
  BundleForward b = render_bundle(model, {ray}, {t}, m, rng, false);
  RenderSample out;
  out.s_values = std::move(b.s_values);
  out.densities = b.query.sigmas;
  out.colors = b.query.colors;
  out.weights = b.weights;
  out.color = b.colors.row(0).transpose();
  out.depth = b.depths[0];
  return out;
}

void render_frame(const fields::FieldModel& model, const Camera& camera, double t, int m,
                  bool deterministic, Image& image, GridD& depth, int threads, uint64_t seed) {
  camera.validate();
  image = Image(camera.width, camera.height);
  depth = GridD(camera.width, camera.height);

  const int rows_per_block = 4;
  const int n_blocks = (camera.height + rows_per_block - 1) / rows_per_block;

  parallel_blocks(n_blocks, threads, [&](int block) {
    const int y0 = block * rows_per_block;
    const int y1 = std::min(camera.height, y0 + rows_per_block);
    std::vector<Ray> rays;
    std::vector<double> times;
    rays.reserve(size_t(camera.width) * (y1 - y0));
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < camera.width; ++x) {
        rays.push_back(pixel_ray(camera, x, y));
        times.push_back(t);
      }
    Rng block_rng;
    Rng* rng = nullptr;
    if (!deterministic) {
      block_rng = Rng::derive(seed, 0x66726d65ull, uint64_t(block));
      rng = &block_rng;
    }
    BundleForward b = render_bundle(model, rays, times, m, rng, false);
    int r = 0;
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < camera.width; ++x, ++r) {
        image.set_color(x, y, b.colors.row(r).transpose());
        depth.at(x, y) = b.depths[r];
      }
  });
}

}  // namespace dynrf::render
