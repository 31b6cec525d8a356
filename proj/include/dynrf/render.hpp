#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dynrf/camera.hpp"
#include "dynrf/fields.hpp"
#include "dynrf/grid.hpp"
#include "dynrf/rng.hpp"

namespace dynrf::render {

// r(s) = origin + s * march. march is the camera ray direction scaled so its
// camera-frame z component is 1: the parameter s (and thus rendered depth) is
// camera z-depth, which keeps back-projection exact. dir is the unit version
// used as the view direction in field queries.
struct Ray {
  Vec3 origin;
  Vec3 dir;    // unit
  Vec3 march;  // camera-z-normalized
  double znear = 0, zfar = 0;
};

// Ray through the center of pixel (u,v), i.e. through (u+0.5, v+0.5).
Ray pixel_ray(const Camera& camera, double u, double v);

// m samples, one per stratum of [near, far]. rng == nullptr selects the
// deterministic midpoint mode (stratum centers).
std::vector<double> stratified_samples(const Ray& ray, int m, Rng* rng);

// w_j = (1 - exp(-sigma_j * delta_j)) * exp(-sum_{k<j} sigma_k * delta_k).
Eigen::VectorXd render_weights(const Eigen::VectorXd& densities, const Eigen::VectorXd& deltas);

// C = sum w_j c_j, D = sum w_j s_j with s_j the j-th sample parameter.
// s_values has one more entry than weights; the last sample carries no weight.
void render_color_depth(const Eigen::VectorXd& weights, const Eigen::MatrixXd& colors,
                        const std::vector<double>& s_values, Vec3& color, double& depth);

// Per-ray quadrature record.
struct RenderSample {
  std::vector<double> s_values;  // m, ascending
  Eigen::VectorXd densities;     // m-1
  Eigen::MatrixXd colors;        // (m-1) x 3
  Eigen::VectorXd weights;       // m-1
  Vec3 color;
  double depth = 0;
};

// Batched render of several rays with a shared sample count. Stores the
// caches needed to backpropagate through the quadrature and both fields.
struct BundleForward {
  int n_rays = 0;
  int m = 0;  // samples per ray; m-1 field evaluations per ray
  std::vector<double> s_values;  // n_rays * m
  Eigen::VectorXd deltas;        // n_rays * (m-1)
  fields::QueryBatch query;
  Eigen::VectorXd alphas;  // 1 - exp(-sigma*delta), per point
  Eigen::VectorXd trans;   // transmittance before each point
  Eigen::VectorXd weights;
  Eigen::MatrixXd colors;  // [n_rays, 3]
  Eigen::VectorXd depths;  // [n_rays]
};

BundleForward render_bundle(const fields::FieldModel& model, const std::vector<Ray>& rays,
                            const std::vector<double>& times, int m, Rng* rng, bool with_tape);

// Accumulates gradients of <colors,d_colors> + <depths,d_depths> w.r.t. both
// nets. The bundle must have been rendered with_tape.
void render_bundle_backward(const fields::FieldModel& model, const BundleForward& bundle,
                            const Eigen::MatrixXd& d_colors, const Eigen::VectorXd& d_depths,
                            nn::Gradients& theta_grads, nn::Gradients& phi_grads);

RenderSample render_ray(const fields::FieldModel& model, const Ray& ray, double t, int m,
                        Rng* rng);

// Full-frame render; deterministic uses midpoint sampling, otherwise strata
// are jittered from per-block streams derived from `seed`. Pixels render in
// fixed blocks so the output is identical for any thread count.
void render_frame(const fields::FieldModel& model, const Camera& camera, double t, int m,
                  bool deterministic, Image& image, GridD& depth, int threads = 0,
                  uint64_t seed = 0);

}  // namespace dynrf::render
