#include "dynrf/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dynrf::nn {

namespace {

void apply_activation(Activation act, Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::Identity:
      break;
    case Activation::Relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::Sigmoid:
      z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      break;
  }
}

// d(act)/dz expressed through the post-activation value a.
// Relu uses subgradient 0 at the kink.
void scale_by_activation_grad(Activation act, const Eigen::MatrixXd& a, Eigen::MatrixXd& g) {
  switch (act) {
    case Activation::Identity:
      break;
    case Activation::Relu:
      g.array() *= (a.array() > 0.0).cast<double>();
      break;
    case Activation::Sigmoid:
      g.array() *= a.array() * (1.0 - a.array());
      break;
  }
}

}  // namespace

size_t Mlp::param_count() const {
  size_t n = 0;
  for (const Layer& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void Mlp::validate() const {
  if (layers.empty()) throw std::invalid_argument("mlp: no layers");
  if (skip_layer == 0) throw std::invalid_argument("mlp: skip cannot target the first layer");
  if (skip_layer >= int(layers.size())) throw std::invalid_argument("mlp: skip layer out of range");
  for (size_t k = 0; k < layers.size(); ++k) {
    const Layer& l = layers[k];
    if (l.bias.size() != l.weight.rows())
      throw std::invalid_argument("mlp: bias/weight mismatch at layer " + std::to_string(k));
    if (k > 0) {
      int expect = layers[k - 1].out_dim();
      if (int(k) == skip_layer) expect += skip_dim;
      if (l.in_dim() != expect)
        throw std::invalid_argument("mlp: dimension break at layer " + std::to_string(k) +
                                    " (expected in " + std::to_string(expect) + ", got " +
                                    std::to_string(l.in_dim()) + ")");
    }
    if (!l.weight.allFinite() || !l.bias.allFinite())
      throw std::invalid_argument("mlp: non-finite parameter at layer " + std::to_string(k));
  }
}

Mlp make_mlp(const std::vector<int>& dims, const std::vector<Activation>& acts, Rng& rng,
             int skip_layer, int skip_dim) {
  if (dims.size() < 2) throw std::invalid_argument("make_mlp: need at least one layer");
  if (acts.size() != dims.size() - 1)
    throw std::invalid_argument("make_mlp: one activation per layer required");
  Mlp net;
  net.skip_layer = skip_layer;
  net.skip_dim = skip_layer >= 0 ? skip_dim : 0;
  for (size_t k = 0; k + 1 < dims.size(); ++k) {
    int in = dims[k];
    if (int(k) == skip_layer) in += skip_dim;
    int out = dims[k + 1];
    Layer l;
    l.weight.resize(out, in);
    const double bound = 1.0 / std::sqrt(double(in));
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) l.weight(r, c) = rng.uniform(-bound, bound);
    l.bias = Eigen::VectorXd::Zero(out);
    l.act = acts[k];
    net.layers.push_back(std::move(l));
  }
  net.validate();
  return net;
}

void Gradients::set_zero() {
  for (auto& w : weight) w.setZero();
  for (auto& b : bias) b.setZero();
}

void Gradients::add(const Gradients& other) {
  for (size_t k = 0; k < weight.size(); ++k) {
    weight[k] += other.weight[k];
    bias[k] += other.bias[k];
  }
}

bool Gradients::same_shape(const Mlp& net) const {
  if (weight.size() != net.layers.size() || bias.size() != net.layers.size()) return false;
  for (size_t k = 0; k < weight.size(); ++k) {
    if (weight[k].rows() != net.layers[k].weight.rows() ||
        weight[k].cols() != net.layers[k].weight.cols() ||
        bias[k].size() != net.layers[k].bias.size())
      return false;
  }
  return true;
}

Gradients make_gradients(const Mlp& net) {
  Gradients g;
  for (const Layer& l : net.layers) {
    g.weight.emplace_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.emplace_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& input,
                            const Eigen::MatrixXd& skip_input, Tape* tape) {
  if (input.cols() != net.input_dim())
    throw std::invalid_argument("mlp_forward: input width " + std::to_string(input.cols()) +
                                " != layer 0 fan-in " + std::to_string(net.input_dim()));
  if (net.has_skip()) {
    if (skip_input.rows() != input.rows() || skip_input.cols() != net.skip_dim)
      throw std::invalid_argument("mlp_forward: skip input shape mismatch");
  } else if (skip_input.size() != 0) {
    throw std::invalid_argument("mlp_forward: skip input given but net has no skip");
  }

  if (tape) {
    tape->input = input;
    tape->skip_input = skip_input;
    tape->activations.clear();
    tape->activations.reserve(net.layers.size());
  }

  Eigen::MatrixXd a = input;
  for (size_t k = 0; k < net.layers.size(); ++k) {
    const Layer& l = net.layers[k];
    Eigen::MatrixXd z;
    if (int(k) == net.skip_layer) {
      Eigen::MatrixXd cat(a.rows(), a.cols() + skip_input.cols());
      cat << a, skip_input;
      z = cat * l.weight.transpose();
    } else {
      z = a * l.weight.transpose();
    }
    z.rowwise() += l.bias.transpose();
    apply_activation(l.act, z);
    if (tape) tape->activations.push_back(z);
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd mlp_forward(const Mlp& net, const Eigen::VectorXd& input, Tape* tape) {
  Eigen::MatrixXd out = mlp_forward(net, input.transpose(), Eigen::MatrixXd(), tape);
  return out.row(0).transpose();
}

Eigen::MatrixXd replay_forward(const Mlp& net, const Tape& tape) {
  return mlp_forward(net, tape.input, tape.skip_input, nullptr);
}

InputGrads mlp_backward(const Mlp& net, const Tape& tape, const Eigen::MatrixXd& output_grad,
                        Gradients& accum) {
  const size_t L = net.layers.size();
  if (tape.activations.size() != L)
    throw std::invalid_argument("mlp_backward: tape does not match net");
  if (output_grad.rows() != tape.input.rows() || output_grad.cols() != net.output_dim())
    throw std::invalid_argument("mlp_backward: output grad shape mismatch");
  if (!accum.same_shape(net)) throw std::invalid_argument("mlp_backward: grad store shape mismatch");

  InputGrads result;
  if (net.has_skip()) result.skip = Eigen::MatrixXd::Zero(tape.input.rows(), net.skip_dim);

  Eigen::MatrixXd g = output_grad;
  for (size_t k = L; k-- > 0;) {
    const Layer& l = net.layers[k];
    scale_by_activation_grad(l.act, tape.activations[k], g);

    if (int(k) == net.skip_layer) {
      const Eigen::MatrixXd& prev = k == 0 ? tape.input : tape.activations[k - 1];
      Eigen::MatrixXd cat(prev.rows(), prev.cols() + tape.skip_input.cols());
      cat << prev, tape.skip_input;
      accum.weight[k].noalias() += g.transpose() * cat;
      accum.bias[k] += g.colwise().sum().transpose();
      Eigen::MatrixXd gin = g * l.weight;
      result.skip += gin.rightCols(net.skip_dim);
      g = gin.leftCols(prev.cols()).eval();
    } else {
      const Eigen::MatrixXd& prev = k == 0 ? tape.input : tape.activations[k - 1];
      accum.weight[k].noalias() += g.transpose() * prev;
      accum.bias[k] += g.colwise().sum().transpose();
      g = (g * l.weight).eval();
    }
  }
  result.input = std::move(g);
  return result;
}

AdamState make_adam_state(const Mlp& net, const AdamConfig& config) {
  AdamState s;
  s.m = make_gradients(net);
  s.v = make_gradients(net);
  s.step = 0;
  s.config = config;
  return s;
}

void adam_step(Mlp& net, const Gradients& grads, AdamState& state) {
  if (!grads.same_shape(net) || !state.m.same_shape(net))
    throw std::invalid_argument("adam_step: shape mismatch");
  for (size_t k = 0; k < net.layers.size(); ++k) {
    if (!grads.weight[k].allFinite() || !grads.bias[k].allFinite())
      throw std::runtime_error("adam_step: non-finite gradient at layer " + std::to_string(k));
  }

  state.step += 1;
  const AdamConfig& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, double(state.step));

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    p.array() -= c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
  };

  for (size_t k = 0; k < net.layers.size(); ++k) {
    update(net.layers[k].weight, grads.weight[k], state.m.weight[k], state.v.weight[k]);
    update(net.layers[k].bias, grads.bias[k], state.m.bias[k], state.v.bias[k]);
  }
}

double finite_diff_check(const Mlp& net, const Eigen::VectorXd& input,
                         const Eigen::VectorXd& probe_grad, double step) {
  if (step <= 0.0) throw std::invalid_argument("finite_diff_check: step must be positive");

  Tape tape;
  mlp_forward(net, input, &tape);
  Gradients analytic = make_gradients(net);
  mlp_backward(net, tape, probe_grad.transpose(), analytic);

  Mlp probe = net;
  auto scalar_at = [&]() {
    Eigen::VectorXd out = mlp_forward(probe, input, nullptr);
    return out.dot(probe_grad);
  };

  double max_rel = 0.0;
  auto check_entry = [&](double& p, double a) {
    const double saved = p;
    p = saved + step;
    const double fp = scalar_at();
    p = saved - step;
    const double fm = scalar_at();
    p = saved;
    const double fd = (fp - fm) / (2.0 * step);
    const double denom = std::max({std::abs(a), std::abs(fd), 1e-8});
    max_rel = std::max(max_rel, std::abs(a - fd) / denom);
  };

  for (size_t k = 0; k < probe.layers.size(); ++k) {
    Layer& l = probe.layers[k];
    for (int r = 0; r < l.weight.rows(); ++r)
      for (int c = 0; c < l.weight.cols(); ++c) check_entry(l.weight(r, c), analytic.weight[k](r, c));
    for (int r = 0; r < l.bias.size(); ++r) check_entry(l.bias(r), analytic.bias[k](r));
  }
  return max_rel;
}

}  // namespace dynrf::nn
