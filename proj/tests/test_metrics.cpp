#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dynrf/metrics.hpp"
#include "dynrf/render.hpp"
#include "dynrf/synth.hpp"
#include "testutil.hpp"

using namespace dynrf;

namespace {

Image random_image(Rng& rng, int w, int h) {
  Image img(w, h);
  for (double& v : img.data) v = rng.next_double();
  return img;
}

Image shifted(const Image& a, double offset) {
  Image b = a;
  for (double& v : b.data) v += offset;
  return b;
}

Image hflip(const Image& a) {
  Image b(a.width, a.height);
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) b.set_color(x, y, a.color(a.width - 1 - x, y));
  return b;
}

}  // namespace

TEST_CASE("psnr: identical images hit the infinity sentinel") {
  Rng rng(61);
  Image a = random_image(rng, 16, 16);
  CHECK(std::isinf(metrics::psnr(a, a, 1.0)));
}

TEST_CASE("psnr: uniform offsets give exact closed-form values") {
  Rng rng(62);
  Image a = random_image(rng, 16, 16);
  CHECK(metrics::psnr(a, shifted(a, 0.1), 1.0) == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(metrics::psnr(a, shifted(a, 1.0), 1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("psnr strictly decreases as noise grows") {
  Rng rng(63);
  Image a = random_image(rng, 16, 16);
  std::vector<double> pattern(a.data.size());
  for (double& v : pattern) v = rng.uniform(-1.0, 1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double amp : {0.01, 0.05, 0.1}) {
    Image b = a;
    for (size_t i = 0; i < b.data.size(); ++i) b.data[i] += amp * pattern[i];
    const double value = metrics::psnr(a, b, 1.0);
    CHECK(value < prev);
    prev = value;
  }
}

TEST_CASE("psnr rejects mismatched dimensions") {
  Image a(4, 4), b(5, 4);
  CHECK_THROWS_AS(metrics::psnr(a, b, 1.0), std::invalid_argument);
}

TEST_CASE("ssim: identity within 1e-12 and the constant-image closed form") {
  Rng rng(64);
  Image a = random_image(rng, 20, 14);
  CHECK(metrics::ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  Image half(12, 12, 0.5), six(12, 12, 0.6);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const double expected = ((2.0 * 0.5 * 0.6 + c1) * c2) / ((0.25 + 0.36 + c1) * c2);
  CHECK(metrics::ssim(half, six) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("ssim: symmetric, bounded, and windows must fit") {
  Rng rng(65);
  for (int trial = 0; trial < 10; ++trial) {
    Image a = random_image(rng, 15, 13);
    Image b = random_image(rng, 15, 13);
    const double ab = metrics::ssim(a, b);
    CHECK(ab == metrics::ssim(b, a));
    CHECK(ab >= -1.0);
    CHECK(ab <= 1.0);
  }
  Image small(10, 12, 0.5);
  CHECK_THROWS_AS(metrics::ssim(small, small), std::invalid_argument);
}

TEST_CASE("both metrics are invariant under a simultaneous horizontal flip") {
  Rng rng(66);
  Image a = random_image(rng, 17, 12);
  Image b = random_image(rng, 17, 12);
  CHECK(metrics::psnr(a, b, 1.0) == doctest::Approx(metrics::psnr(hflip(a), hflip(b), 1.0)));
  CHECK(metrics::ssim(a, b) == doctest::Approx(metrics::ssim(hflip(a), hflip(b))).epsilon(1e-12));
}

TEST_CASE("evaluate: feeding a model its own renders back maxes both metrics") {
  fields::EncodingConfig enc;
  enc.levels_position = 2;
  enc.levels_direction = 1;
  enc.levels_time = 2;
  fields::FieldModel model = fields::make_field_model(enc, 8, 2, 3);

  data::SynthSceneSpec spec;
  spec.width = 16;
  spec.height = 16;
  spec.frames = 2;
  spec.corruption_fraction = 0.0;
  data::Dataset ds;
  ds.camera = spec.make_camera();
  ds.has_masks = false;
  const int m = 8;
  for (int i = 1; i <= 2; ++i) {
    data::Frame f;
    f.index = i;
    f.t = data::frame_time(i, 2, false);
    GridD depth;
    render::render_frame(model, ds.camera, f.t, m, true, f.image, depth);
    f.depth = GridD(16, 16, 1.0);
    ds.frames.push_back(std::move(f));
  }

  metrics::MetricReport report = metrics::evaluate(model, ds, m);
  REQUIRE(report.frames.size() == 2);
  for (const auto& fm : report.frames) {
    CHECK(std::isinf(fm.psnr));
    CHECK(fm.ssim == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(std::isinf(report.mean_psnr));
  CHECK(report.mean_ssim == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("evaluate: the aggregate is the arithmetic mean of the frames") {
  fields::EncodingConfig enc;
  enc.levels_position = 2;
  enc.levels_direction = 1;
  enc.levels_time = 2;
  fields::FieldModel model = fields::make_field_model(enc, 8, 2, 4);

  data::SynthSceneSpec spec;
  spec.width = 16;
  spec.height = 16;
  spec.frames = 3;
  spec.corruption_fraction = 0.0;
  Rng rng(67);
  data::Dataset ds = data::synth_scene(spec, rng).dataset;

  metrics::MetricReport report = metrics::evaluate(model, ds, 8);
  double ps = 0, ss = 0;
  for (const auto& fm : report.frames) {
    ps += fm.psnr;
    ss += fm.ssim;
  }
  CHECK(report.mean_psnr == doctest::Approx(ps / 3.0).epsilon(1e-12));
  CHECK(report.mean_ssim == doctest::Approx(ss / 3.0).epsilon(1e-12));
}

TEST_CASE("report format mirrors the quality-table column order") {
  metrics::MetricReport report;
  report.frames = {{1, 30.1234, 0.9876}, {2, std::numeric_limits<double>::infinity(), 1.0}};
  report.mean_psnr = std::numeric_limits<double>::infinity();
  report.mean_ssim = 0.99;
  const std::string text = metrics::format_report(report);
  CHECK(text.find("PSNR ↑\tSSIM ↑\tLPIPS ↓") != std::string::npos);
  CHECK(text.find("000001\t30.123\t0.988\tn/a") != std::string::npos);
  CHECK(text.find("000002\tinf\t1.000\tn/a") != std::string::npos);
  CHECK(text.find("mean\tinf\t0.990\tn/a") != std::string::npos);
}
