#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dynrf/fields.hpp"
#include "testutil.hpp"

using namespace dynrf;
using fields::EncodingConfig;
using fields::FieldModel;

namespace {

EncodingConfig small_encoding() {
  EncodingConfig e;
  e.levels_position = 2;
  e.levels_direction = 1;
  e.levels_time = 2;
  return e;
}

FieldModel small_model(uint64_t seed) { return fields::make_field_model(small_encoding(), 8, 2, seed); }

void zero_net(nn::Mlp& net) {
  for (auto& l : net.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

// Scalar functional of the batched dynamic query, used for finite differences.
double batch_scalar(const FieldModel& model, const Eigen::MatrixXd& xs, const Eigen::MatrixXd& dirs,
                    const Eigen::VectorXd& ts, const Eigen::MatrixXd& probe_c,
                    const Eigen::VectorXd& probe_s) {
  fields::QueryBatch q = fields::dynamic_query_batch(model, xs, dirs, ts, false);
  return (q.colors.array() * probe_c.array()).sum() + q.sigmas.dot(probe_s);
}

}  // namespace

TEST_CASE("encode: zero input gives alternating sin/cos blocks") {
  Eigen::VectorXd v(1);
  v << 0.0;
  Eigen::VectorXd enc = fields::positional_encode(v, 2, false);
  REQUIRE(enc.size() == 4);
  CHECK(enc[0] == 0.0);
  CHECK(enc[1] == 1.0);
  CHECK(enc[2] == 0.0);
  CHECK(enc[3] == 1.0);
}

TEST_CASE("encode: quarter turn by hand") {
  Eigen::VectorXd v(1);
  v << 0.25;
  Eigen::VectorXd enc = fields::positional_encode(v, 1, false);
  REQUIRE(enc.size() == 2);
  CHECK(enc[0] == doctest::Approx(0.70711).epsilon(1e-4));
  CHECK(enc[1] == doctest::Approx(0.70711).epsilon(1e-4));
}

TEST_CASE("encode: documented interleaving with the raw input included") {
  Eigen::VectorXd v(2);
  v << 0.5, 0.0;
  Eigen::VectorXd enc = fields::positional_encode(v, 1, true);
  REQUIRE(enc.size() == 6);
  CHECK(enc[0] == 0.5);
  CHECK(enc[1] == 0.0);
  CHECK(enc[2] == doctest::Approx(1.0));  // sin(pi/2)
  CHECK(enc[3] == doctest::Approx(0.0));  // sin(0)
  CHECK(enc[4] == doctest::Approx(0.0).epsilon(1e-12));  // cos(pi/2)
  CHECK(enc[5] == doctest::Approx(1.0));  // cos(0)
}

TEST_CASE("encode: length formula holds for every configuration") {
  EncodingConfig e;
  for (int dim : {1, 2, 3}) {
    for (int levels : {0, 1, 4, 10}) {
      for (bool include : {false, true}) {
        e.include_input = include;
        Eigen::VectorXd v = Eigen::VectorXd::Constant(dim, 0.3);
        Eigen::VectorXd enc = fields::positional_encode(v, levels, include);
        CHECK(enc.size() == e.encoded_dim(dim, levels));
      }
    }
  }
}

TEST_CASE("encode: components stay in [-1,1] and match direct evaluation") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd v = testutil::random_vector(rng, 3, -2.0, 2.0);
    Eigen::VectorXd enc = fields::positional_encode(v, 6, false);
    int o = 0;
    for (int l = 0; l < 6; ++l) {
      const double f = std::pow(2.0, l) * M_PI;
      for (int i = 0; i < 3; ++i) CHECK(enc[o + i] == doctest::Approx(std::sin(f * v[i])).epsilon(1e-9));
      for (int i = 0; i < 3; ++i)
        CHECK(enc[o + 3 + i] == doctest::Approx(std::cos(f * v[i])).epsilon(1e-9));
      o += 6;
    }
    CHECK(enc.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("encode backward matches finite differences") {
  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = 3, levels = 4;
    const bool include = trial % 2 == 0;
    Eigen::VectorXd v = testutil::random_vector(rng, dim);
    const int n = dim * 2 * levels + (include ? dim : 0);
    Eigen::VectorXd d_enc = testutil::random_vector(rng, n);

    Eigen::VectorXd enc(n);
    fields::positional_encode(v.data(), dim, levels, include, enc.data());
    Vec3 dv = Vec3::Zero();
    fields::positional_encode_backward(enc.data(), d_enc.data(), dim, levels, include, dv.data());

    const double h = 1e-6;
    for (int i = 0; i < dim; ++i) {
      Eigen::VectorXd vp = v, vm = v;
      vp[i] += h;
      vm[i] -= h;
      Eigen::VectorXd ep(n), em(n);
      fields::positional_encode(vp.data(), dim, levels, include, ep.data());
      fields::positional_encode(vm.data(), dim, levels, include, em.data());
      const double fd = (ep.dot(d_enc) - em.dot(d_enc)) / (2.0 * h);
      CHECK(dv[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("canonical query: zero-weight net lands on the head activations") {
  FieldModel model = small_model(1);
  zero_net(model.theta);
  fields::FieldOutput out = canonical_query(model, Vec3(0.3, -0.2, 1.0), Vec3(0, 0, 1));
  CHECK(out.color[0] == doctest::Approx(0.5));
  CHECK(out.color[1] == doctest::Approx(0.5));
  CHECK(out.color[2] == doctest::Approx(0.5));
  CHECK(out.density == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("canonical query ignores the displacement net entirely") {
  FieldModel a = small_model(2);
  FieldModel b = a;
  for (auto& l : b.phi.layers) l.weight.array() += 7.0;
  const Vec3 x(0.1, 0.2, 0.5), d(0, 0, 1);
  fields::FieldOutput oa = canonical_query(a, x, d);
  fields::FieldOutput ob = canonical_query(b, x, d);
  CHECK(oa.color == ob.color);
  CHECK(oa.density == ob.density);
}

TEST_CASE("canonical query: density is non-negative and colors bounded") {
  FieldModel model = small_model(3);
  Rng rng(23);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 x = testutil::random_vector(rng, 3, -3.0, 3.0);
    Vec3 d = testutil::random_vector(rng, 3, -1.0, 1.0);
    if (d.norm() < 1e-3) continue;
    d.normalize();
    fields::FieldOutput out = canonical_query(model, x, d);
    CHECK(out.density >= 0.0);
    for (int c = 0; c < 3; ++c) {
      CHECK(out.color[c] >= 0.0);
      CHECK(out.color[c] <= 1.0);
    }
  }
}

TEST_CASE("canonical query rejects non-unit directions") {
  FieldModel model = small_model(4);
  CHECK_THROWS_AS(canonical_query(model, Vec3(0, 0, 1), Vec3(0, 0, 2)), std::invalid_argument);
}

TEST_CASE("displacement query: zero-weight phi is the zero displacement") {
  FieldModel model = small_model(5);
  zero_net(model.phi);
  CHECK(displacement_query(model, Vec3(0.4, 0.1, 2.0), 0.5) == Vec3(0, 0, 0));
}

TEST_CASE("displacement query: continuous in t") {
  FieldModel model = small_model(6);
  const Vec3 x(0.2, -0.1, 1.5);
  auto max_step = [&](double h) {
    double worst = 0.0;
    for (double t = 0.0; t + h <= 1.0; t += h)
      worst = std::max(worst, (displacement_query(model, x, t + h) - displacement_query(model, x, t)).norm());
    return worst;
  };
  const double coarse = max_step(1e-2);
  const double fine = max_step(1e-3);
  CHECK(fine < coarse);        // steps shrink as the grid refines
  CHECK(fine < 10.0 * 1e-3);   // locally Lipschitz scale
}

TEST_CASE("displacement query: deterministic and bounded to [0,1] times") {
  FieldModel model = small_model(7);
  const Vec3 x(0.2, 0.3, 1.0);
  CHECK(displacement_query(model, x, 0.25) == displacement_query(model, x, 0.25));
  CHECK_THROWS_AS(displacement_query(model, x, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(displacement_query(model, x, 1.1), std::invalid_argument);
}

TEST_CASE("dynamic query: zeroed final phi layer collapses to the canonical query") {
  FieldModel model = small_model(8);
  model.phi.layers.back().weight.setZero();
  model.phi.layers.back().bias.setZero();
  const Vec3 x(0.25, -0.4, 1.2), d(0, 0, 1);
  for (double t : {0.0, 0.3, 1.0}) {
    fields::FieldOutput dyn = dynamic_query(model, x, d, t);
    fields::FieldOutput can = canonical_query(model, x, d);
    CHECK(dyn.color == can.color);  // bitwise: the warp adds an exact zero
    CHECK(dyn.density == can.density);
  }
}

TEST_CASE("dynamic query: constant displacement shifts the canonical sample") {
  FieldModel model = small_model(9);
  zero_net(model.phi);
  model.phi.layers.back().bias << 0.1, 0.0, 0.0;
  const Vec3 x(0.3, 0.2, 1.1), d(0, 0, 1);
  fields::FieldOutput dyn = dynamic_query(model, x, d, 0.7);
  fields::FieldOutput can = canonical_query(model, x + Vec3(0.1, 0.0, 0.0), d);
  CHECK(dyn.color == can.color);
  CHECK(dyn.density == can.density);
}

TEST_CASE("dynamic query batch agrees with the single-point composition") {
  FieldModel model = small_model(10);
  Rng rng(24);
  const int n = 7;
  Eigen::MatrixXd xs(n, 3), dirs(n, 3);
  Eigen::VectorXd ts(n);
  for (int i = 0; i < n; ++i) {
    xs.row(i) = testutil::random_vector(rng, 3).transpose();
    Vec3 d = testutil::random_vector(rng, 3);
    d.normalize();
    dirs.row(i) = d.transpose();
    ts[i] = rng.next_double();
  }
  fields::QueryBatch batch = fields::dynamic_query_batch(model, xs, dirs, ts, false);
  for (int i = 0; i < n; ++i) {
    fields::FieldOutput one =
        dynamic_query(model, xs.row(i).transpose(), dirs.row(i).transpose(), ts[i]);
    CHECK((batch.colors.row(i).transpose() - one.color).norm() < 1e-12);
    CHECK(batch.sigmas[i] == doctest::Approx(one.density).epsilon(1e-12));
  }
}

TEST_CASE("end-to-end gradient through both nets matches finite differences") {
  Rng rng(25);
  const int n = 4;
  Eigen::MatrixXd xs(n, 3), dirs(n, 3);
  Eigen::VectorXd ts(n);
  for (int i = 0; i < n; ++i) {
    xs.row(i) = testutil::random_vector(rng, 3, -0.5, 0.5).transpose();
    Vec3 d = testutil::random_vector(rng, 3);
    d.normalize();
    dirs.row(i) = d.transpose();
    ts[i] = 0.1 + 0.8 * rng.next_double();
  }
  Eigen::MatrixXd probe_c(n, 3);
  probe_c.setRandom();
  Eigen::VectorXd probe_s = testutil::random_vector(rng, n);

  FieldModel model = small_model(11);
  fields::QueryBatch batch = fields::dynamic_query_batch(model, xs, dirs, ts, true);
  nn::Gradients theta_g = nn::make_gradients(model.theta);
  nn::Gradients phi_g = nn::make_gradients(model.phi);
  fields::dynamic_query_backward(model, batch, probe_c, probe_s, theta_g, phi_g);

  const double h = 1e-5;
  double worst = 0.0;
  bool phi_nonzero = false;
  auto sweep = [&](nn::Mlp& net, const nn::Gradients& analytic) {
    for (size_t k = 0; k < net.layers.size(); ++k) {
      auto probe_entry = [&](double& p, double a) {
        const double saved = p;
        p = saved + h;
        const double fp = batch_scalar(model, xs, dirs, ts, probe_c, probe_s);
        p = saved - h;
        const double fm = batch_scalar(model, xs, dirs, ts, probe_c, probe_s);
        p = saved;
        const double fd = (fp - fm) / (2.0 * h);
        const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
        worst = std::max(worst, rel);
      };
      for (int r = 0; r < net.layers[k].weight.rows(); ++r)
        for (int c = 0; c < net.layers[k].weight.cols(); ++c)
          probe_entry(net.layers[k].weight(r, c), analytic.weight[k](r, c));
      for (int r = 0; r < net.layers[k].bias.size(); ++r)
        probe_entry(net.layers[k].bias[r], analytic.bias[k](r));
    }
  };
  sweep(model.theta, theta_g);
  sweep(model.phi, phi_g);
  for (const auto& w : phi_g.weight)
    if (!w.isZero(0.0)) phi_nonzero = true;
  CHECK(worst < 1e-4);
  CHECK(phi_nonzero);  // the warp receives gradient when the canonical field varies
}

TEST_CASE("field model validates its wiring") {
  FieldModel model = small_model(12);
  CHECK_NOTHROW(model.validate());
  FieldModel broken = model;
  broken.encoding.levels_time += 1;
  CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
}
