#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dynrf/dataset.hpp"
#include "dynrf/fields.hpp"
#include "dynrf/render.hpp"

namespace dynrf::training {

struct RefineConfig {
  bool enabled = true;
  double alpha = 0.1;
  int iteration = 400;  // the trigger iteration K
};

struct TrainConfig {
  int iterations = 2000;
  int batch_rays = 512;
  int samples_per_ray = 32;
  RefineConfig refine;
  nn::AdamConfig adam;
  uint64_t seed = 1;
  double color_weight = 1.0;
  double depth_weight = 1.0;
  int log_interval = 10;
  int checkpoint_interval = 0;  // 0 = only at completion
  int threads = 0;

  void validate(const data::Dataset& dataset) const;
};

struct RaySample {
  render::Ray ray;
  double t = 0;
  Vec3 gt_color = Vec3::Zero();
  double gt_depth = 0;
  int frame = 0;  // 0-based position in the dataset
  int u = 0, v = 0;
};

// Uniform draw over (frame, pixel) pairs.
std::vector<RaySample> ray_batch(const data::Dataset& dataset, int batch_rays, Rng& rng);

// color_weight * |pred_c - gt_c|^2 + depth_weight * |pred_d - gt_d|.
double loss(const Vec3& pred_c, double pred_d, const Vec3& gt_c, double gt_d,
            double color_weight, double depth_weight);

struct LogRecord {
  int iteration = 0;
  double color_loss = 0;  // mean squared color error over the interval
  double depth_loss = 0;  // mean absolute depth error over the interval
};

struct RefineEvent {
  int iteration = 0;
  std::vector<std::pair<int, int>> replaced;  // per frame (fg, bg)
};

struct TrainLog {
  std::vector<LogRecord> records;
  std::vector<RefineEvent> refine_events;

  // Deliberately excludes wall-clock time so reruns with the same seed
  // produce byte-identical logs; timing goes to the console instead.
  std::string to_tsv() const;
};

using CheckpointHook = std::function<void(int iteration, const fields::FieldModel& model)>;

// The optimization loop. Mutates the model in place; when refinement fires at
// iteration K the dataset's depth maps are replaced by their refined
// versions, which supervise the remaining iterations. Deterministic given
// (config, dataset, model) for any thread count.
TrainLog train(const TrainConfig& config, data::Dataset& dataset, fields::FieldModel& model,
               const CheckpointHook& hook = {}, bool verbose = false);

}  // namespace dynrf::training
