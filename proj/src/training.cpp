#include "dynrf/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "dynrf/parallel.hpp"

namespace dynrf::training {

namespace {

constexpr int kRaysPerBlock = 64;  // fixed so gradients reduce in a fixed order

double sign_or_zero(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

void TrainConfig::validate(const data::Dataset& dataset) const {
  dataset.validate();
  if (iterations < 1) throw std::invalid_argument("train config: iterations must be >= 1");
  if (batch_rays < 1) throw std::invalid_argument("train config: batch_rays must be >= 1");
  if (samples_per_ray < 2) throw std::invalid_argument("train config: samples_per_ray must be >= 2");
  if (log_interval < 1) throw std::invalid_argument("train config: log_interval must be >= 1");
  if (!(color_weight >= 0.0) || !(depth_weight >= 0.0))
    throw std::invalid_argument("train config: loss weights must be non-negative");
  if (refine.enabled) {
    if (!(refine.alpha >= 0.0 && refine.alpha <= 1.0))
      throw std::invalid_argument("train config: refine alpha outside [0,1]");
    if (refine.iteration < 1 || refine.iteration > iterations)
      throw std::invalid_argument("train config: refine iteration K must lie in [1, iterations]");
    if (!dataset.has_masks)
      throw std::invalid_argument("train config: refinement enabled but the dataset has no masks");
  }
}

std::vector<RaySample> ray_batch(const data::Dataset& dataset, int batch_rays, Rng& rng) {
  if (dataset.frames.empty()) throw std::invalid_argument("ray_batch: empty dataset");
  const int T = dataset.frame_count();
  const int W = dataset.camera.width;
  const int H = dataset.camera.height;

  std::vector<RaySample> batch(batch_rays);
  for (RaySample& s : batch) {
    s.frame = int(rng.next_below(uint64_t(T)));
    const int pixel = int(rng.next_below(uint64_t(W) * uint64_t(H)));
    s.u = pixel % W;
    s.v = pixel / W;
    const data::Frame& f = dataset.frames[s.frame];
    s.ray = render::pixel_ray(dataset.camera, s.u, s.v);
    s.t = f.t;
    s.gt_color = f.image.color(s.u, s.v);
    s.gt_depth = f.depth.at(s.u, s.v);
  }
  return batch;
}

double loss(const Vec3& pred_c, double pred_d, const Vec3& gt_c, double gt_d,
            double color_weight, double depth_weight) {
  if (!pred_c.allFinite() || !std::isfinite(pred_d) || !gt_c.allFinite() || !std::isfinite(gt_d))
    throw std::invalid_argument("loss: non-finite input");
  return color_weight * (pred_c - gt_c).squaredNorm() + depth_weight * std::abs(pred_d - gt_d);
}

std::string TrainLog::to_tsv() const {
  std::ostringstream out;
  char buf[128];
  out << "iteration\tcolor_loss\tdepth_loss\n";
  for (const LogRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%d\t%.17g\t%.17g\n", r.iteration, r.color_loss, r.depth_loss);
    out << buf;
  }
  if (!refine_events.empty()) {
    out << "\nrefine_iteration\tframe\treplaced_fg\treplaced_bg\n";
    for (const RefineEvent& ev : refine_events)
      for (size_t f = 0; f < ev.replaced.size(); ++f)
        out << ev.iteration << "\t" << (f + 1) << "\t" << ev.replaced[f].first << "\t"
            << ev.replaced[f].second << "\n";
  }
  return out.str();
}

TrainLog train(const TrainConfig& config, data::Dataset& dataset, fields::FieldModel& model,
               const CheckpointHook& hook, bool verbose) {
  config.validate(dataset);
  model.validate();

  nn::AdamState theta_state = nn::make_adam_state(model.theta, config.adam);
  nn::AdamState phi_state = nn::make_adam_state(model.phi, config.adam);

  Rng master(Rng::mix(config.seed + 0x74726e0aull));
  TrainLog log;

  const int B = config.batch_rays;
  const int n_blocks = (B + kRaysPerBlock - 1) / kRaysPerBlock;

  std::vector<nn::Gradients> theta_block(n_blocks), phi_block(n_blocks);
  for (int b = 0; b < n_blocks; ++b) {
    theta_block[b] = nn::make_gradients(model.theta);
    phi_block[b] = nn::make_gradients(model.phi);
  }
  nn::Gradients theta_grads = nn::make_gradients(model.theta);
  nn::Gradients phi_grads = nn::make_gradients(model.phi);

  double interval_color = 0.0, interval_depth = 0.0;
  int interval_steps = 0;
  const auto t_start = std::chrono::steady_clock::now();

  for (int it = 1; it <= config.iterations; ++it) {
    const std::vector<RaySample> batch = ray_batch(dataset, B, master);

    std::vector<double> block_color(n_blocks, 0.0), block_depth(n_blocks, 0.0);
    parallel_blocks(n_blocks, config.threads, [&](int b) {
      const int lo = b * kRaysPerBlock;
      const int hi = std::min(B, lo + kRaysPerBlock);
      std::vector<render::Ray> rays;
      std::vector<double> times;
      for (int r = lo; r < hi; ++r) {
        rays.push_back(batch[r].ray);
        times.push_back(batch[r].t);
      }
      Rng jitter = Rng::derive(config.seed, uint64_t(it), uint64_t(b));
      render::BundleForward fwd = render::render_bundle(model, rays, times, config.samples_per_ray,
                                                        &jitter, /*with_tape=*/true);

      const int n = hi - lo;
      Eigen::MatrixXd d_colors(n, 3);
      Eigen::VectorXd d_depths(n);
      for (int r = 0; r < n; ++r) {
        const RaySample& s = batch[lo + r];
        const Vec3 dc = fwd.colors.row(r).transpose() - s.gt_color;
        const double dd = fwd.depths[r] - s.gt_depth;
        block_color[b] += dc.squaredNorm();
        block_depth[b] += std::abs(dd);
        d_colors.row(r) = (2.0 * config.color_weight / double(B)) * dc.transpose();
        d_depths[r] = (config.depth_weight / double(B)) * sign_or_zero(dd);
      }

      theta_block[b].set_zero();
      phi_block[b].set_zero();
      render::render_bundle_backward(model, fwd, d_colors, d_depths, theta_block[b], phi_block[b]);
    });

    double color_loss = 0.0, depth_loss = 0.0;
    theta_grads.set_zero();
    phi_grads.set_zero();
    for (int b = 0; b < n_blocks; ++b) {  // fixed reduction order
      color_loss += block_color[b];
      depth_loss += block_depth[b];
      theta_grads.add(theta_block[b]);
      phi_grads.add(phi_block[b]);
    }
    color_loss /= double(B);
    depth_loss /= double(B);
    if (!std::isfinite(color_loss) || !std::isfinite(depth_loss))
      throw std::runtime_error("train: non-finite loss at iteration " + std::to_string(it));

    nn::adam_step(model.theta, theta_grads, theta_state);
    nn::adam_step(model.phi, phi_grads, phi_state);

    interval_color += color_loss;
    interval_depth += depth_loss;
    interval_steps += 1;
    if (it % config.log_interval == 0 || it == config.iterations) {
      log.records.push_back({it, interval_color / interval_steps, interval_depth / interval_steps});
      if (verbose) {
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        std::fprintf(stderr, "iter %6d  color %.6f  depth %.6f  %.1fs\n", it,
                     interval_color / interval_steps, interval_depth / interval_steps, elapsed);
      }
      interval_color = interval_depth = 0.0;
      interval_steps = 0;
    }

    if (config.refine.enabled && it == config.refine.iteration) {
      RefineEvent event;
      event.iteration = it;
      for (data::Frame& frame : dataset.frames) {
        Image rendered;
        GridD predicted;
        render::render_frame(model, dataset.camera, frame.t, config.samples_per_ray,
                             /*deterministic=*/true, rendered, predicted, config.threads);
        refine::RefineResult res =
            refine::refine_depth(frame.depth, predicted, frame.mask, config.refine.alpha);
        frame.depth = std::move(res.refined);
        event.replaced.emplace_back(res.replaced_fg, res.replaced_bg);
      }
      log.refine_events.push_back(std::move(event));
      if (verbose) std::fprintf(stderr, "iter %6d  depth maps refined\n", it);
    }

    if (hook && config.checkpoint_interval > 0 && it % config.checkpoint_interval == 0 &&
        it != config.iterations)
      hook(it, model);
  }

  if (hook) hook(config.iterations, model);
  return log;
}

}  // namespace dynrf::training
