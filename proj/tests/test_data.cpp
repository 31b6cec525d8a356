#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "dynrf/dataset.hpp"
#include "dynrf/io_image.hpp"
#include "dynrf/render.hpp"
#include "dynrf/synth.hpp"
#include "testutil.hpp"

using namespace dynrf;
namespace fs = std::filesystem;

namespace {

data::SynthSceneSpec small_spec() {
  data::SynthSceneSpec spec;
  spec.width = 12;
  spec.height = 12;
  spec.frames = 3;
  spec.corruption_fraction = 0.0;
  return spec;
}

}  // namespace

TEST_CASE("pfm round trip is bit exact") {
  testutil::TempDir tmp("dynrf-pfm");
  Rng rng(51);
  GridD grid(7, 5);
  for (double& v : grid.data) v = rng.uniform(-10.0, 10.0);
  io::snap_to_float(grid);
  io::save_pfm(grid, tmp.path / "x.pfm");
  GridD back = io::load_pfm(tmp.path / "x.pfm");
  CHECK(back.width == 7);
  CHECK(back.height == 5);
  CHECK(back.data == grid.data);
}

TEST_CASE("png round trip stays within one quantization step") {
  testutil::TempDir tmp("dynrf-png");
  Rng rng(52);
  Image img(9, 6);
  for (double& v : img.data) v = rng.next_double();
  io::save_png_rgb(img, tmp.path / "x.png");
  Image back = io::load_png_rgb(tmp.path / "x.png");
  REQUIRE(back.same_shape(img));
  for (size_t i = 0; i < img.data.size(); ++i)
    CHECK(std::abs(back.data[i] - img.data[i]) <= 1.0 / 255.0);
  // and a second pass is the identity on the quantized values
  io::save_png_rgb(back, tmp.path / "y.png");
  Image again = io::load_png_rgb(tmp.path / "y.png");
  CHECK(again.data == back.data);
}

TEST_CASE("mask png: nonzero means tool") {
  testutil::TempDir tmp("dynrf-mask");
  GridU8 mask(4, 2, 0);
  mask.at(1, 0) = 1;
  mask.at(3, 1) = 1;
  io::save_png_mask(mask, tmp.path / "m.png");
  GridU8 back = io::load_png_mask(tmp.path / "m.png");
  CHECK(back.data == mask.data);
}

TEST_CASE("frame times follow i/T with the zero-based alternative") {
  CHECK(data::frame_time(1, 3, false) == doctest::Approx(1.0 / 3.0));
  CHECK(data::frame_time(3, 3, false) == doctest::Approx(1.0));
  CHECK(data::frame_time(1, 3, true) == 0.0);
  CHECK(data::frame_time(3, 3, true) == doctest::Approx(1.0));
}

TEST_CASE("synth scene: masks split tool from tissue and depths are positive") {
  data::SynthSceneSpec spec = small_spec();
  Rng rng(53);
  data::SynthResult result = data::synth_scene(spec, rng);
  REQUIRE(result.dataset.frame_count() == 3);
  CHECK(result.dataset.frames[0].t == doctest::Approx(1.0 / 3.0));
  CHECK(result.dataset.frames[2].t == doctest::Approx(1.0));
  for (const data::Frame& f : result.dataset.frames) {
    const auto& m = f.mask.data;
    const int fg = int(std::count(m.begin(), m.end(), uint8_t(1)));
    CHECK(fg > 0);
    CHECK(fg < int(m.size()));
    for (double d : f.depth.data) CHECK(d > 0.0);
  }
}

TEST_CASE("synth scene: zero-amplitude motion freezes every frame") {
  data::SynthSceneSpec spec = small_spec();
  spec.blob_path_radius = 0.0;
  Rng rng(54);
  data::SynthResult result = data::synth_scene(spec, rng);
  for (int i = 1; i < 3; ++i) {
    CHECK(result.dataset.frames[i].image.data == result.dataset.frames[0].image.data);
    CHECK(result.dataset.frames[i].depth.data == result.dataset.frames[0].depth.data);
    CHECK(result.dataset.frames[i].mask.data == result.dataset.frames[0].mask.data);
  }
}

TEST_CASE("synth scene: corruption touches exactly the requested pixel count") {
  data::SynthSceneSpec spec = small_spec();

  spec.corruption_fraction = 0.0;
  Rng rng0(55);
  data::SynthResult clean = data::synth_scene(spec, rng0);
  for (int i = 0; i < 3; ++i)
    CHECK(clean.dataset.frames[i].depth.data == clean.oracle_depth[i].data);

  spec.corruption_fraction = 0.1;
  Rng rng1(55);
  data::SynthResult noisy = data::synth_scene(spec, rng1);
  const int expect = int(std::ceil(0.1 * spec.width * spec.height));
  for (int i = 0; i < 3; ++i) {
    int differ = 0;
    for (size_t p = 0; p < noisy.oracle_depth[i].size(); ++p)
      if (noisy.dataset.frames[i].depth.data[p] != noisy.oracle_depth[i].data[p]) ++differ;
    CHECK(differ == expect);
  }
}

TEST_CASE("oracle render: vacuum spec gives zero image and depth") {
  data::SynthSceneSpec spec = small_spec();
  spec.blob_density = 0.0;
  spec.wall_density = 0.0;
  data::OracleFrame frame = data::oracle_render(spec, spec.make_camera(), 0.5, 1024);
  for (double v : frame.image.data) CHECK(v == 0.0);
  for (double v : frame.depth.data) CHECK(v == 0.0);
}

TEST_CASE("oracle render: a thin dense wall reads back its own distance") {
  data::SynthSceneSpec spec = small_spec();
  spec.blob_density = 0.0;
  spec.wall_thickness = 0.005;
  spec.wall_density = 8000.0;
  const render::Camera cam = spec.make_camera();
  double prev = 0.0;
  for (int dense_m : {2048, 4096, 8192}) {
    data::OracleFrame frame = data::oracle_render(spec, cam, 0.5, dense_m);
    const double center = frame.depth.at(spec.width / 2, spec.height / 2);
    CHECK(std::abs(center - spec.wall_z) < 4.0 * spec.wall_thickness);
    if (prev != 0.0) CHECK(std::abs(center - prev) < 2e-3);  // Cauchy convergence
    prev = center;
  }
}

TEST_CASE("oracle render: self-convergence under sample doubling") {
  data::SynthSceneSpec spec = small_spec();
  const render::Camera cam = spec.make_camera();
  data::OracleFrame a = data::oracle_render(spec, cam, 0.5, 1024);
  data::OracleFrame b = data::oracle_render(spec, cam, 0.5, 2048);
  for (size_t i = 0; i < a.depth.size(); ++i)
    CHECK(std::abs(a.depth.data[i] - b.depth.data[i]) < 1e-3);
  for (size_t i = 0; i < a.image.data.size(); ++i)
    CHECK(std::abs(a.image.data[i] - b.image.data[i]) < 1e-3);
}

TEST_CASE("oracle and engine quadrature agree on the analytic fields") {
  data::SynthSceneSpec spec = small_spec();
  const render::Camera cam = spec.make_camera();
  const double t = 2.0 / 3.0;
  const int m = 2048;
  data::OracleFrame oracle = data::oracle_render(spec, cam, t, m);

  // Same fields pushed through the engine's sampling + weight machinery.
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      render::Ray ray = render::pixel_ray(cam, u, v);
      std::vector<double> s = render::stratified_samples(ray, m, nullptr);
      Eigen::VectorXd sigma(m - 1), deltas(m - 1);
      Eigen::MatrixXd colors(m - 1, 3);
      for (int j = 0; j < m - 1; ++j) {
        const Vec3 x = ray.origin + s[j] * ray.march;
        sigma[j] = spec.density(x, t);
        colors.row(j) = spec.color(x, t).transpose();
        deltas[j] = s[j + 1] - s[j];
      }
      Eigen::VectorXd w = render::render_weights(sigma, deltas);
      Vec3 color;
      double depth;
      render::render_color_depth(w, colors, s, color, depth);
      CHECK(std::abs(depth - oracle.depth.at(u, v)) < 1e-6);
      CHECK((color - oracle.image.color(u, v)).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("dataset round trip: depths bit exact, images within quantization") {
  testutil::TempDir tmp("dynrf-ds");
  data::SynthSceneSpec spec = small_spec();
  spec.corruption_fraction = 0.1;
  Rng rng(56);
  data::Dataset ds = data::synth_scene(spec, rng).dataset;
  data::save_dataset(ds, tmp.path / "ds");
  data::Dataset back = data::load_dataset(tmp.path / "ds");

  REQUIRE(back.frame_count() == ds.frame_count());
  CHECK(back.camera.fx == ds.camera.fx);
  for (int i = 0; i < ds.frame_count(); ++i) {
    CHECK(back.frames[i].t == ds.frames[i].t);
    CHECK(back.frames[i].depth.data == ds.frames[i].depth.data);
    CHECK(back.frames[i].mask.data == ds.frames[i].mask.data);
    for (size_t p = 0; p < ds.frames[i].image.data.size(); ++p)
      CHECK(std::abs(back.frames[i].image.data[p] - ds.frames[i].image.data[p]) <= 1.0 / 255.0);
  }

  // a second save/load cycle is the identity
  data::save_dataset(back, tmp.path / "ds2");
  data::Dataset again = data::load_dataset(tmp.path / "ds2");
  for (int i = 0; i < ds.frame_count(); ++i) {
    CHECK(again.frames[i].image.data == back.frames[i].image.data);
    CHECK(again.frames[i].depth.data == back.frames[i].depth.data);
  }
}

TEST_CASE("loader: missing mask names the frame; masks optional when not required") {
  testutil::TempDir tmp("dynrf-miss");
  data::SynthSceneSpec spec = small_spec();
  Rng rng(57);
  data::Dataset ds = data::synth_scene(spec, rng).dataset;
  data::save_dataset(ds, tmp.path / "ds");
  fs::remove(tmp.path / "ds" / "masks" / "000002.png");

  CHECK_THROWS_WITH_AS(data::load_dataset(tmp.path / "ds", true),
                       doctest::Contains("frame 2"), std::runtime_error);
  data::Dataset loose = data::load_dataset(tmp.path / "ds", false);
  CHECK(loose.frame_count() == 3);
}

TEST_CASE("loader: missing masks directory falls back to box prompts") {
  testutil::TempDir tmp("dynrf-box");
  data::SynthSceneSpec spec = small_spec();
  Rng rng(58);
  data::Dataset ds = data::synth_scene(spec, rng).dataset;
  data::save_dataset(ds, tmp.path / "ds");
  fs::remove_all(tmp.path / "ds" / "masks");
  {
    std::ofstream boxes(tmp.path / "ds" / "boxes.json");
    boxes << "[[1,1,4,4],[2,2,5,5],[0,0,3,3]]\n";
  }
  data::Dataset boxed = data::load_dataset(tmp.path / "ds", true);
  CHECK(boxed.has_masks);
  CHECK(boxed.frames[0].mask.at(1, 1) == 1);
  CHECK(boxed.frames[0].mask.at(0, 0) == 0);
  CHECK(boxed.frames[2].mask.at(0, 0) == 1);
}

TEST_CASE("loader: wrong depth resolution and broken contiguity are named errors") {
  testutil::TempDir tmp("dynrf-bad");
  data::SynthSceneSpec spec = small_spec();
  Rng rng(59);
  data::Dataset ds = data::synth_scene(spec, rng).dataset;
  data::save_dataset(ds, tmp.path / "ds");

  GridD wrong(5, 5, 1.0);
  io::save_pfm(wrong, tmp.path / "ds" / "depth" / "000002.pfm");
  CHECK_THROWS_WITH_AS(data::load_dataset(tmp.path / "ds"), doctest::Contains("depth resolution"),
                       std::invalid_argument);

  data::save_dataset(ds, tmp.path / "ds3");
  fs::rename(tmp.path / "ds3" / "images" / "000002.png", tmp.path / "ds3" / "images" / "000009.png");
  CHECK_THROWS_WITH_AS(data::load_dataset(tmp.path / "ds3"), doctest::Contains("contiguous"),
                       std::runtime_error);
}

TEST_CASE("synth spec validation rejects an escaping blob") {
  data::SynthSceneSpec spec = small_spec();
  spec.blob_path_radius = 5.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
