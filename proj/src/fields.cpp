#include "dynrf/fields.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dynrf::fields {

namespace {

constexpr int kMaxEncodeDim = 8;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

void check_unit(const double* d, int row) {
  const double n2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
  if (std::abs(std::sqrt(n2) - 1.0) > 1e-9)
    throw std::invalid_argument("direction must be unit length (sample " + std::to_string(row) +
                                ")");
}

void check_time(double t, int row) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("time outside [0,1] (sample " + std::to_string(row) + ")");
}

}  // namespace

void positional_encode(const double* v, int dim, int levels, bool include_input, double* out) {
  if (levels < 0) throw std::invalid_argument("positional_encode: levels must be >= 0");
  if (dim > kMaxEncodeDim) throw std::invalid_argument("positional_encode: dim too large");
  int o = 0;
  if (include_input)
    for (int i = 0; i < dim; ++i) out[o++] = v[i];
  if (levels == 0) return;

  // Level l holds sin/cos of 2^l*pi*v; higher levels come from the
  // double-angle recurrence so only one sin/cos pair is evaluated per
  // component.
  double s[kMaxEncodeDim], c[kMaxEncodeDim];
  for (int i = 0; i < dim; ++i) {
    s[i] = std::sin(M_PI * v[i]);
    c[i] = std::cos(M_PI * v[i]);
  }
  for (int l = 0; l < levels; ++l) {
    for (int i = 0; i < dim; ++i) out[o++] = s[i];
    for (int i = 0; i < dim; ++i) out[o++] = c[i];
    if (l + 1 < levels) {
      for (int i = 0; i < dim; ++i) {
        const double ns = 2.0 * s[i] * c[i];
        const double nc = c[i] * c[i] - s[i] * s[i];
        s[i] = ns;
        c[i] = nc;
      }
    }
  }
}

Eigen::VectorXd positional_encode(const Eigen::VectorXd& v, int levels, bool include_input) {
  const int dim = int(v.size());
  Eigen::VectorXd out(dim * 2 * levels + (include_input ? dim : 0));
  positional_encode(v.data(), dim, levels, include_input, out.data());
  return out;
}

void positional_encode_backward(const double* enc, const double* d_enc, int dim, int levels,
                                bool include_input, double* dv) {
  int o = 0;
  if (include_input)
    for (int i = 0; i < dim; ++i) dv[i] += d_enc[o++];
  double freq = M_PI;
  for (int l = 0; l < levels; ++l) {
    const double* sin_blk = enc + o;
    const double* d_sin = d_enc + o;
    o += dim;
    const double* cos_blk = enc + o;
    const double* d_cos = d_enc + o;
    o += dim;
    for (int i = 0; i < dim; ++i)
      dv[i] += freq * (cos_blk[i] * d_sin[i] - sin_blk[i] * d_cos[i]);
    freq *= 2.0;
  }
}

void FieldModel::validate() const {
  theta.validate();
  phi.validate();
  const int px = encoding.position_dim();
  if (theta.input_dim() != px + encoding.direction_dim())
    throw std::invalid_argument("field model: theta input width mismatch");
  if (theta.output_dim() != 4)
    throw std::invalid_argument("field model: theta must output rgb + density");
  if (theta.has_skip() && theta.skip_dim != px)
    throw std::invalid_argument("field model: theta skip width mismatch");
  if (phi.input_dim() != px + encoding.time_dim())
    throw std::invalid_argument("field model: phi input width mismatch");
  if (phi.output_dim() != 3)
    throw std::invalid_argument("field model: phi must output a displacement");
}

FieldModel make_field_model(const EncodingConfig& encoding, int hidden_width, int hidden_layers,
                            uint64_t seed) {
  if (hidden_width < 1 || hidden_layers < 1)
    throw std::invalid_argument("make_field_model: bad architecture");
  Rng rng(Rng::mix(seed + 0x5154cafeull));

  const int px = encoding.position_dim();
  auto dims_for = [&](int in, int out) {
    std::vector<int> dims;
    dims.push_back(in);
    for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden_width);
    dims.push_back(out);
    return dims;
  };
  std::vector<nn::Activation> acts(hidden_layers, nn::Activation::Relu);
  acts.push_back(nn::Activation::Identity);

  FieldModel model;
  model.encoding = encoding;
  const int skip = hidden_layers >= 2 ? hidden_layers / 2 : -1;
  model.theta = nn::make_mlp(dims_for(px + encoding.direction_dim(), 4), acts, rng, skip,
                             skip >= 0 ? px : 0);
  model.phi = nn::make_mlp(dims_for(px + encoding.time_dim(), 3), acts, rng);
  model.validate();
  return model;
}

FieldOutput canonical_query(const FieldModel& model, const Vec3& x, const Vec3& d) {
  check_unit(d.data(), 0);
  const EncodingConfig& e = model.encoding;
  Eigen::VectorXd in(model.theta.input_dim());
  positional_encode(x.data(), 3, e.levels_position, e.include_input, in.data());
  positional_encode(d.data(), 3, e.levels_direction, e.include_input,
                    in.data() + e.position_dim());

  Eigen::MatrixXd skip;
  if (model.theta.has_skip()) skip = in.head(e.position_dim()).transpose();
  Eigen::MatrixXd raw = nn::mlp_forward(model.theta, in.transpose(), skip, nullptr);

  FieldOutput out;
  out.color = Vec3(sigmoid(raw(0, 0)), sigmoid(raw(0, 1)), sigmoid(raw(0, 2)));
  out.density = softplus(raw(0, 3));
  return out;
}

Vec3 displacement_query(const FieldModel& model, const Vec3& x, double t) {
  check_time(t, 0);
  const EncodingConfig& e = model.encoding;
  Eigen::VectorXd in(model.phi.input_dim());
  positional_encode(x.data(), 3, e.levels_position, e.include_input, in.data());
  positional_encode(&t, 1, e.levels_time, e.include_input, in.data() + e.position_dim());
  Eigen::VectorXd out = nn::mlp_forward(model.phi, in, nullptr);
  return Vec3(out[0], out[1], out[2]);
}

FieldOutput dynamic_query(const FieldModel& model, const Vec3& x, const Vec3& d, double t) {
  const Vec3 dx = displacement_query(model, x, t);
  return canonical_query(model, x + dx, d);
}

QueryBatch dynamic_query_batch(const FieldModel& model, const Eigen::MatrixXd& xs,
                               const Eigen::MatrixXd& dirs, const Eigen::VectorXd& ts,
                               bool with_tape) {
  const int n = int(xs.rows());
  if (dirs.rows() != n || ts.size() != n || xs.cols() != 3 || dirs.cols() != 3)
    throw std::invalid_argument("dynamic_query_batch: shape mismatch");
  const EncodingConfig& e = model.encoding;
  const int px = e.position_dim();

  Eigen::MatrixXd phi_in(n, model.phi.input_dim());
  {
    Eigen::VectorXd row(model.phi.input_dim());
    for (int i = 0; i < n; ++i) {
      check_time(ts[i], i);
      const Vec3 x = xs.row(i).transpose();
      positional_encode(x.data(), 3, e.levels_position, e.include_input, row.data());
      const double t = ts[i];
      positional_encode(&t, 1, e.levels_time, e.include_input, row.data() + px);
      phi_in.row(i) = row.transpose();
    }
  }

  QueryBatch batch;
  nn::Tape* phi_tape = with_tape ? &batch.phi_tape : nullptr;
  Eigen::MatrixXd dx = nn::mlp_forward(model.phi, phi_in, Eigen::MatrixXd(), phi_tape);
  Eigen::MatrixXd warped = xs + dx;

  Eigen::MatrixXd theta_in(n, model.theta.input_dim());
  {
    Eigen::VectorXd row(model.theta.input_dim());
    for (int i = 0; i < n; ++i) {
      const Vec3 xw = warped.row(i).transpose();
      const Vec3 d = dirs.row(i).transpose();
      check_unit(d.data(), i);
      positional_encode(xw.data(), 3, e.levels_position, e.include_input, row.data());
      positional_encode(d.data(), 3, e.levels_direction, e.include_input, row.data() + px);
      theta_in.row(i) = row.transpose();
    }
  }

  Eigen::MatrixXd skip;
  if (model.theta.has_skip()) skip = theta_in.leftCols(px);
  nn::Tape* theta_tape = with_tape ? &batch.theta_tape : nullptr;
  Eigen::MatrixXd raw = nn::mlp_forward(model.theta, theta_in, skip, theta_tape);

  batch.colors.resize(n, 3);
  batch.sigmas.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) batch.colors(i, c) = sigmoid(raw(i, c));
    batch.sigmas[i] = softplus(raw(i, 3));
  }
  if (with_tape) batch.raw = std::move(raw);
  return batch;
}

void dynamic_query_backward(const FieldModel& model, const QueryBatch& batch,
                            const Eigen::MatrixXd& d_colors, const Eigen::VectorXd& d_sigmas,
                            nn::Gradients& theta_grads, nn::Gradients& phi_grads) {
  const int n = int(batch.sigmas.size());
  if (batch.raw.rows() != n)
    throw std::invalid_argument("dynamic_query_backward: batch was run without tape");
  if (d_colors.rows() != n || d_sigmas.size() != n)
    throw std::invalid_argument("dynamic_query_backward: grad shape mismatch");
  const EncodingConfig& e = model.encoding;
  const int px = e.position_dim();

  // Output heads: sigmoid'(z) = c(1-c), softplus'(z) = sigmoid(z).
  Eigen::MatrixXd d_raw(n, 4);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      const double col = batch.colors(i, c);
      d_raw(i, c) = d_colors(i, c) * col * (1.0 - col);
    }
    d_raw(i, 3) = d_sigmas[i] * sigmoid(batch.raw(i, 3));
  }

  nn::InputGrads theta_in_grads = nn::mlp_backward(model.theta, batch.theta_tape, d_raw, theta_grads);

  // Position gradient flows through both the layer-0 columns and the skip.
  Eigen::MatrixXd d_enc_x = theta_in_grads.input.leftCols(px);
  if (model.theta.has_skip()) d_enc_x += theta_in_grads.skip;

  Eigen::MatrixXd d_warped = Eigen::MatrixXd::Zero(n, 3);
  {
    Eigen::VectorXd enc_row(px), grad_row(px);
    Vec3 dv;
    for (int i = 0; i < n; ++i) {
      enc_row = batch.theta_tape.input.row(i).head(px).transpose();
      grad_row = d_enc_x.row(i).transpose();
      dv.setZero();
      positional_encode_backward(enc_row.data(), grad_row.data(), 3, e.levels_position,
                                 e.include_input, dv.data());
      d_warped.row(i) = dv.transpose();
    }
  }

  // warped = x + phi(x,t): the displacement gradient is d_warped itself.
  nn::mlp_backward(model.phi, batch.phi_tape, d_warped, phi_grads);
}

}  // namespace dynrf::fields
