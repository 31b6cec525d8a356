#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dynrf/rng.hpp"

namespace dynrf::nn {

enum class Activation : uint8_t { Identity = 0, Relu = 1, Sigmoid = 2 };

struct Layer {
  Eigen::MatrixXd weight;  // [out, in]
  Eigen::VectorXd bias;    // [out]
  Activation act = Activation::Identity;

  int in_dim() const { return int(weight.cols()); }
  int out_dim() const { return int(weight.rows()); }
};

// Fully-connected network over dense real vectors. Layers chain; an optional
// skip appends skip_dim extra feature columns to the input of layers[skip_layer].
struct Mlp {
  std::vector<Layer> layers;
  int skip_layer = -1;  // -1 = no skip
  int skip_dim = 0;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  int output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }
  size_t param_count() const;

  bool has_skip() const { return skip_layer >= 0; }

  // Checks dimension chaining (with the skip accounted for) and finiteness.
  void validate() const;
};

// dims = {in, h1, ..., out}; acts has dims.size()-1 entries. Weights start
// uniform in +-1/sqrt(fan_in), biases zero.
Mlp make_mlp(const std::vector<int>& dims, const std::vector<Activation>& acts, Rng& rng,
             int skip_layer = -1, int skip_dim = 0);

// Cache of one batched forward pass: the inputs plus every layer's
// post-activation output. Enough to replay the pass and to run the reverse
// sweep.
struct Tape {
  Eigen::MatrixXd input;       // [n, in_dim]
  Eigen::MatrixXd skip_input;  // [n, skip_dim]; empty when the net has no skip
  std::vector<Eigen::MatrixXd> activations;

  int batch_size() const { return int(input.rows()); }
  const Eigen::MatrixXd& output() const { return activations.back(); }
};

// Parameter-shaped gradient (or moment) storage mirroring an Mlp.
struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  void set_zero();
  void add(const Gradients& other);
  bool same_shape(const Mlp& net) const;
};

Gradients make_gradients(const Mlp& net);

struct InputGrads {
  Eigen::MatrixXd input;  // [n, in_dim]
  Eigen::MatrixXd skip;   // [n, skip_dim]; empty when the net has no skip
};

// Batched forward pass; rows of `input` are independent samples. `skip_input`
// must be empty unless the net has a skip. Pass tape=nullptr to skip caching.
Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& input,
                            const Eigen::MatrixXd& skip_input, Tape* tape);

// Single-sample convenience wrappers for nets without a skip.
Eigen::VectorXd mlp_forward(const Mlp& net, const Eigen::VectorXd& input, Tape* tape);

// Reruns the forward pass from the tape's stored input. Used to check the
// tape invariant: replay reproduces the recorded output bit for bit.
Eigen::MatrixXd replay_forward(const Mlp& net, const Tape& tape);

// Gradients of <output, output_grad> w.r.t. every parameter and the inputs.
// Parameter gradients are accumulated into `accum`.
InputGrads mlp_backward(const Mlp& net, const Tape& tape, const Eigen::MatrixXd& output_grad,
                        Gradients& accum);

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Gradients m;  // first moment
  Gradients v;  // second moment
  uint64_t step = 0;
  AdamConfig config;
};

AdamState make_adam_state(const Mlp& net, const AdamConfig& config);

// Standard Adam update with bias correction. Rejects non-finite gradients
// (naming the offending layer) before touching any parameter.
void adam_step(Mlp& net, const Gradients& grads, AdamState& state);

// Compares mlp_backward against central finite differences of the scalar
// <output, probe_grad> over every parameter; returns the max relative error.
// Test utility; cost is O(param_count) forward passes.
double finite_diff_check(const Mlp& net, const Eigen::VectorXd& input,
                         const Eigen::VectorXd& probe_grad, double step);

}  // namespace dynrf::nn
