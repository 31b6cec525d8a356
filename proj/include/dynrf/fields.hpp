#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "dynrf/grid.hpp"
#include "dynrf/nn.hpp"

namespace dynrf::fields {

// Sinusoidal feature lift. Layout: [raw input (when included)], then per
// level l = 0..L-1 the block [sin(2^l pi v) over all components, then
// cos(2^l pi v) over all components]. The order is part of the checkpoint
// format and must not change.
struct EncodingConfig {
  int levels_position = 10;
  int levels_direction = 4;
  int levels_time = 10;
  bool include_input = true;

  int encoded_dim(int input_dim, int levels) const {
    return input_dim * 2 * levels + (include_input ? input_dim : 0);
  }
  int position_dim() const { return encoded_dim(3, levels_position); }
  int direction_dim() const { return encoded_dim(3, levels_direction); }
  int time_dim() const { return encoded_dim(1, levels_time); }
};

// Writes the encoding of `v` (dim components) into `out`.
void positional_encode(const double* v, int dim, int levels, bool include_input, double* out);
Eigen::VectorXd positional_encode(const Eigen::VectorXd& v, int levels, bool include_input);

// Accumulates d<enc, d_enc>/dv into dv. Only needs the encoded values: the
// derivative of each sin block is a scaled copy of the cos block and vice
// versa.
void positional_encode_backward(const double* enc, const double* d_enc, int dim, int levels,
                                bool include_input, double* dv);

// The scene representation: a canonical radiance field (theta) queried at
// positions warped by a time-conditioned displacement field (phi).
struct FieldModel {
  nn::Mlp theta;  // enc(x) ++ enc(d) -> [rgb raw, density raw]
  nn::Mlp phi;    // enc(x) ++ enc(t) -> displacement
  EncodingConfig encoding;

  void validate() const;
};

// theta: 8 hidden relu layers with enc(x) skip into layer 5, linear 4-wide
// head. phi: 8 hidden relu layers, linear 3-wide head.
FieldModel make_field_model(const EncodingConfig& encoding, int hidden_width, int hidden_layers,
                            uint64_t seed);

struct FieldOutput {
  Vec3 color;      // sigmoid head, each channel in [0,1]
  double density;  // softplus head, >= 0
};

// Canonical field at (x, d); d must be unit length. Time never enters.
FieldOutput canonical_query(const FieldModel& model, const Vec3& x, const Vec3& d);

// Displacement to canonical space at (x, t); t must lie in [0,1].
Vec3 displacement_query(const FieldModel& model, const Vec3& x, double t);

// canonical_query(model, x + displacement_query(model, x, t), d).
FieldOutput dynamic_query(const FieldModel& model, const Vec3& x, const Vec3& d, double t);

// Batched dynamic query with caches for the reverse sweep. Rows of xs/dirs
// are sample points; ts holds the per-point time.
struct QueryBatch {
  Eigen::MatrixXd colors;  // [n,3]
  Eigen::VectorXd sigmas;  // [n]
  // caches (populated when with_tape)
  Eigen::MatrixXd raw;  // theta outputs pre-head [n,4]
  nn::Tape theta_tape;
  nn::Tape phi_tape;
};

QueryBatch dynamic_query_batch(const FieldModel& model, const Eigen::MatrixXd& xs,
                               const Eigen::MatrixXd& dirs, const Eigen::VectorXd& ts,
                               bool with_tape);

// Accumulates d<colors,d_colors> + d<sigmas,d_sigmas> into both nets' grads.
void dynamic_query_backward(const FieldModel& model, const QueryBatch& batch,
                            const Eigen::MatrixXd& d_colors, const Eigen::VectorXd& d_sigmas,
                            nn::Gradients& theta_grads, nn::Gradients& phi_grads);

}  // namespace dynrf::fields
