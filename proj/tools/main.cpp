// dynrf: reconstruct a dynamic scene from posed frames with coarse depth and
// tool masks, via a canonical radiance field warped by a displacement field.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dynrf/checkpoint.hpp"
#include "dynrf/cloud.hpp"
#include "dynrf/dataset.hpp"
#include "dynrf/io_image.hpp"
#include "dynrf/metrics.hpp"
#include "dynrf/parallel.hpp"
#include "dynrf/refine.hpp"
#include "dynrf/render.hpp"
#include "dynrf/synth.hpp"
#include "dynrf/training.hpp"

namespace fs = std::filesystem;
using namespace dynrf;

namespace {

// Exit codes: 0 ok, 2 usage, 3 invalid configuration, 4 I/O or missing file.
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitIo = 4;

// Everything lands via a temporary so failures never leave partial outputs.
void atomic_file(const fs::path& path, const std::function<void(const fs::path&)>& write) {
  const fs::path tmp = path.string() + ".tmp";
  write(tmp);
  fs::rename(tmp, path);
}

void atomic_dir(const fs::path& path, const std::function<void(const fs::path&)>& write) {
  if (fs::exists(path)) throw std::runtime_error("output already exists: " + path.string());
  const fs::path tmp = path.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  write(tmp);
  fs::rename(tmp, path);
}

// Model defaults mirror the radiance-field lineage: 8 hidden layers of 256
// with 10/4/10 encoding levels. Desk-scale runs (see the README) override
// width and levels; the defaults are sized for the full-scale regime.
struct ModelConfig {
  int hidden_width = 256;
  int hidden_layers = 8;
  fields::EncodingConfig encoding;
};

struct CliConfig {
  training::TrainConfig train;
  ModelConfig model;
};

CliConfig load_cli_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  nlohmann::json j;
  in >> j;

  CliConfig cfg;
  auto get = [](const nlohmann::json& obj, const char* key, auto& field) {
    if (obj.contains(key)) field = obj.at(key).get<std::decay_t<decltype(field)>>();
  };
  get(j, "iterations", cfg.train.iterations);
  get(j, "batch_rays", cfg.train.batch_rays);
  get(j, "samples_per_ray", cfg.train.samples_per_ray);
  get(j, "seed", cfg.train.seed);
  get(j, "color_weight", cfg.train.color_weight);
  get(j, "depth_weight", cfg.train.depth_weight);
  get(j, "log_interval", cfg.train.log_interval);
  get(j, "checkpoint_interval", cfg.train.checkpoint_interval);
  get(j, "threads", cfg.train.threads);
  if (j.contains("refine")) {
    const auto& r = j.at("refine");
    get(r, "enabled", cfg.train.refine.enabled);
    get(r, "alpha", cfg.train.refine.alpha);
    get(r, "iteration", cfg.train.refine.iteration);
  }
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    get(a, "lr", cfg.train.adam.lr);
    get(a, "beta1", cfg.train.adam.beta1);
    get(a, "beta2", cfg.train.adam.beta2);
    get(a, "eps", cfg.train.adam.eps);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    get(m, "hidden_width", cfg.model.hidden_width);
    get(m, "hidden_layers", cfg.model.hidden_layers);
    get(m, "levels_position", cfg.model.encoding.levels_position);
    get(m, "levels_direction", cfg.model.encoding.levels_direction);
    get(m, "levels_time", cfg.model.encoding.levels_time);
    get(m, "include_input", cfg.model.encoding.include_input);
  }
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"dynrf: dynamic radiance-field scene reconstruction"};
  app.require_subcommand(1);

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with oracle depth");
  std::string synth_spec, synth_out;
  std::optional<int> synth_frames, synth_width, synth_height;
  std::optional<double> synth_corrupt;
  std::optional<uint64_t> synth_seed;
  synth->add_option("--spec", synth_spec, "scene spec JSON (defaults used when omitted)");
  synth->add_option("--out", synth_out, "output dataset directory")->required();
  synth->add_option("--frames", synth_frames, "frame count override");
  synth->add_option("--width", synth_width, "image width override");
  synth->add_option("--height", synth_height, "image height override");
  synth->add_option("--corrupt-frac", synth_corrupt, "depth corruption fraction override");
  synth->add_option("--seed", synth_seed, "rng seed override");

  // ---- train ----
  auto* train = app.add_subcommand("train", "optimize a model on a dataset");
  std::string train_data, train_config, train_out, train_log, train_refined_out;
  std::optional<int> t_iters, t_batch, t_samples, t_k, t_log_interval, t_ckpt_interval, t_threads,
      t_width, t_layers, t_levels_x, t_levels_d, t_levels_t;
  std::optional<double> t_alpha, t_lr;
  std::optional<uint64_t> t_seed;
  bool t_no_refine = false, t_zero_times = false, t_quiet = false;
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--config", train_config, "training config JSON");
  train->add_option("--out", train_out, "output checkpoint path")->required();
  train->add_option("--log", train_log, "training log path (default <out>.log)");
  train->add_option("--refined-out", train_refined_out,
                    "write the dataset with refined depth maps here");
  train->add_option("--iterations", t_iters, "optimization steps");
  train->add_option("--batch", t_batch, "rays per batch");
  train->add_option("--samples", t_samples, "samples per ray");
  train->add_option("--refine-iteration", t_k, "refinement trigger iteration");
  train->add_option("--alpha", t_alpha, "refinement quantile fraction");
  train->add_flag("--no-refine", t_no_refine, "disable depth refinement");
  train->add_option("--lr", t_lr, "adam learning rate");
  train->add_option("--width", t_width, "hidden layer width");
  train->add_option("--layers", t_layers, "hidden layer count");
  train->add_option("--levels-x", t_levels_x, "position encoding levels");
  train->add_option("--levels-d", t_levels_d, "direction encoding levels");
  train->add_option("--levels-t", t_levels_t, "time encoding levels");
  train->add_option("--log-interval", t_log_interval, "iterations per log record");
  train->add_option("--checkpoint-interval", t_ckpt_interval, "also checkpoint every N iterations");
  train->add_option("--threads", t_threads, "worker threads (0 = all cores)");
  train->add_option("--seed", t_seed, "rng seed (batches, jitter, init)");
  train->add_flag("--time-zero-based", t_zero_times, "assign times (i-1)/(T-1) instead of i/T");
  train->add_flag("--quiet", t_quiet, "suppress progress output");

  // ---- render ----
  auto* render_cmd = app.add_subcommand("render", "render one frame from a checkpoint");
  std::string render_ckpt, render_out, render_depth_out;
  double render_t = 0.0;
  std::optional<int> render_m, render_threads;
  render_cmd->add_option("--ckpt", render_ckpt, "checkpoint path")->required();
  render_cmd->add_option("--t", render_t, "time in [0,1]")->required();
  render_cmd->add_option("--out", render_out, "output (.png image or .pfm depth)")->required();
  render_cmd->add_option("--depth-out", render_depth_out, "also write depth here (.pfm)");
  render_cmd->add_option("--m", render_m, "samples per ray (default from checkpoint)");
  render_cmd->add_option("--threads", render_threads, "worker threads (0 = all cores)");

  // ---- refine ----
  auto* refine_cmd = app.add_subcommand("refine", "refine a dataset's depth maps standalone");
  std::string refine_data, refine_ckpt, refine_out;
  double refine_alpha = 0.1;
  std::optional<int> refine_m, refine_threads;
  bool refine_zero_times = false;
  refine_cmd->add_option("--data", refine_data, "dataset directory")->required();
  refine_cmd->add_option("--ckpt", refine_ckpt, "checkpoint path")->required();
  refine_cmd->add_option("--alpha", refine_alpha, "quantile fraction in [0,1]");
  refine_cmd->add_option("--out", refine_out, "output dataset directory")->required();
  refine_cmd->add_option("--m", refine_m, "samples per ray (default from checkpoint)");
  refine_cmd->add_option("--threads", refine_threads, "worker threads (0 = all cores)");
  refine_cmd->add_flag("--time-zero-based", refine_zero_times, "assign times (i-1)/(T-1) instead of i/T");

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "score renders against a dataset");
  std::string eval_ckpt, eval_data, eval_out;
  std::optional<int> eval_m, eval_threads;
  int eval_stride = 1;
  bool eval_zero_times = false;
  eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
  eval_cmd->add_option("--out", eval_out, "report TSV path")->required();
  eval_cmd->add_option("--m", eval_m, "samples per ray (default from checkpoint)");
  eval_cmd->add_option("--stride", eval_stride, "evaluate every Nth frame");
  eval_cmd->add_option("--threads", eval_threads, "worker threads (0 = all cores)");
  eval_cmd->add_flag("--time-zero-based", eval_zero_times, "assign times (i-1)/(T-1) instead of i/T");

  // ---- export-cloud ----
  auto* cloud_cmd = app.add_subcommand("export-cloud", "back-project a render into a PLY cloud");
  std::string cloud_ckpt, cloud_out;
  double cloud_t = 0.0;
  std::optional<int> cloud_m, cloud_threads;
  cloud_cmd->add_option("--ckpt", cloud_ckpt, "checkpoint path")->required();
  cloud_cmd->add_option("--t", cloud_t, "time in [0,1]")->required();
  cloud_cmd->add_option("--out", cloud_out, "output PLY path")->required();
  cloud_cmd->add_option("--m", cloud_m, "samples per ray (default from checkpoint)");
  cloud_cmd->add_option("--threads", cloud_threads, "worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      app.exit(e);
      return 0;
    }
    std::fprintf(stderr, "%s\n", e.what());
    return kExitUsage;
  }

  if (synth->parsed()) {
    data::SynthSceneSpec spec;
    if (!synth_spec.empty()) spec = data::load_scene_spec(synth_spec);
    if (synth_frames) spec.frames = *synth_frames;
    if (synth_width) spec.width = *synth_width;
    if (synth_height) spec.height = *synth_height;
    if (synth_corrupt) spec.corruption_fraction = *synth_corrupt;
    if (synth_seed) spec.seed = *synth_seed;
    spec.validate();

    Rng rng(Rng::mix(spec.seed + 0x73796eull));
    data::SynthResult result = data::synth_scene(spec, rng);
    atomic_dir(synth_out, [&](const fs::path& dir) {
      data::save_dataset(result.dataset, dir);
      fs::create_directories(dir / "oracle_depth");
      for (size_t i = 0; i < result.oracle_depth.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%06zu.pfm", i + 1);
        io::save_pfm(result.oracle_depth[i], dir / "oracle_depth" / name);
      }
    });
    std::printf("synth: wrote %d frames (%dx%d) to %s\n", spec.frames, spec.width, spec.height,
                synth_out.c_str());
    return 0;
  }

  if (train->parsed()) {
    CliConfig cfg;
    if (!train_config.empty()) cfg = load_cli_config(train_config);
    if (t_iters) cfg.train.iterations = *t_iters;
    if (t_batch) cfg.train.batch_rays = *t_batch;
    if (t_samples) cfg.train.samples_per_ray = *t_samples;
    if (t_k) cfg.train.refine.iteration = *t_k;
    if (t_alpha) cfg.train.refine.alpha = *t_alpha;
    if (t_no_refine) cfg.train.refine.enabled = false;
    if (t_lr) cfg.train.adam.lr = *t_lr;
    if (t_width) cfg.model.hidden_width = *t_width;
    if (t_layers) cfg.model.hidden_layers = *t_layers;
    if (t_levels_x) cfg.model.encoding.levels_position = *t_levels_x;
    if (t_levels_d) cfg.model.encoding.levels_direction = *t_levels_d;
    if (t_levels_t) cfg.model.encoding.levels_time = *t_levels_t;
    if (t_log_interval) cfg.train.log_interval = *t_log_interval;
    if (t_ckpt_interval) cfg.train.checkpoint_interval = *t_ckpt_interval;
    if (t_threads) cfg.train.threads = *t_threads;
    if (t_seed) cfg.train.seed = *t_seed;

    data::Dataset dataset =
        data::load_dataset(train_data, cfg.train.refine.enabled, t_zero_times);
    cfg.train.validate(dataset);

    fields::FieldModel model = fields::make_field_model(
        cfg.model.encoding, cfg.model.hidden_width, cfg.model.hidden_layers, cfg.train.seed);

    auto save = [&](int, const fields::FieldModel& m) {
      Checkpoint ckpt;
      ckpt.model = m;
      ckpt.camera = dataset.camera;
      ckpt.samples_per_ray = cfg.train.samples_per_ray;
      save_checkpoint(ckpt, train_out);
    };
    training::TrainLog log = training::train(cfg.train, dataset, model, save, !t_quiet);

    const fs::path log_path = train_log.empty() ? fs::path(train_out + ".log") : fs::path(train_log);
    atomic_file(log_path, [&](const fs::path& tmp) {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw std::runtime_error("train: cannot write log " + tmp.string());
      out << log.to_tsv();
    });

    if (!train_refined_out.empty())
      atomic_dir(train_refined_out, [&](const fs::path& dir) { data::save_dataset(dataset, dir); });

    std::printf("train: wrote %s and %s\n", train_out.c_str(), log_path.string().c_str());
    return 0;
  }

  if (render_cmd->parsed()) {
    Checkpoint ckpt = load_checkpoint(render_ckpt);
    if (!(render_t >= 0.0 && render_t <= 1.0))
      throw std::invalid_argument("render: t outside [0,1]");
    Image image;
    GridD depth;
    render::render_frame(ckpt.model, ckpt.camera, render_t, render_m.value_or(ckpt.samples_per_ray),
                         true, image, depth, render_threads.value_or(0));
    const bool out_is_depth = fs::path(render_out).extension() == ".pfm";
    atomic_file(render_out, [&](const fs::path& tmp) {
      if (out_is_depth)
        io::save_pfm(depth, tmp);
      else
        io::save_png_rgb(image, tmp);
    });
    if (!render_depth_out.empty())
      atomic_file(render_depth_out, [&](const fs::path& tmp) { io::save_pfm(depth, tmp); });
    std::printf("render: wrote %s\n", render_out.c_str());
    return 0;
  }

  if (refine_cmd->parsed()) {
    Checkpoint ckpt = load_checkpoint(refine_ckpt);
    data::Dataset dataset = data::load_dataset(refine_data, true, refine_zero_times);
    if (!(refine_alpha >= 0.0 && refine_alpha <= 1.0))
      throw std::invalid_argument("refine: alpha outside [0,1]");
    const int m = refine_m.value_or(ckpt.samples_per_ray);
    int total_fg = 0, total_bg = 0;
    for (data::Frame& frame : dataset.frames) {
      Image image;
      GridD predicted;
      render::render_frame(ckpt.model, dataset.camera, frame.t, m, true, image, predicted,
                           refine_threads.value_or(0));
      refine::RefineResult res =
          refine::refine_depth(frame.depth, predicted, frame.mask, refine_alpha);
      frame.depth = std::move(res.refined);
      total_fg += res.replaced_fg;
      total_bg += res.replaced_bg;
    }
    atomic_dir(refine_out, [&](const fs::path& dir) { data::save_dataset(dataset, dir); });
    std::printf("refine: replaced %d foreground and %d background depth pixels across %d frames\n",
                total_fg, total_bg, dataset.frame_count());
    return 0;
  }

  if (eval_cmd->parsed()) {
    Checkpoint ckpt = load_checkpoint(eval_ckpt);
    data::Dataset dataset = data::load_dataset(eval_data, false, eval_zero_times);
    metrics::MetricReport report =
        metrics::evaluate(ckpt.model, dataset, eval_m.value_or(ckpt.samples_per_ray),
                          eval_threads.value_or(0), eval_stride);
    atomic_file(eval_out, [&](const fs::path& tmp) { metrics::write_report(report, tmp); });
    std::printf("eval: mean PSNR %.3f  mean SSIM %.3f  (%s)\n", report.mean_psnr, report.mean_ssim,
                eval_out.c_str());
    return 0;
  }

  if (cloud_cmd->parsed()) {
    Checkpoint ckpt = load_checkpoint(cloud_ckpt);
    if (!(cloud_t >= 0.0 && cloud_t <= 1.0)) throw std::invalid_argument("export-cloud: t outside [0,1]");
    Image image;
    GridD depth;
    render::render_frame(ckpt.model, ckpt.camera, cloud_t, cloud_m.value_or(ckpt.samples_per_ray),
                         true, image, depth, cloud_threads.value_or(0));
    cloud::PointCloud pc = cloud::backproject(image, depth, ckpt.camera);
    atomic_file(cloud_out, [&](const fs::path& tmp) { cloud::write_ply(pc, tmp); });
    std::printf("export-cloud: wrote %zu points to %s\n", pc.points.size(), cloud_out.c_str());
    return 0;
  }

  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
}
