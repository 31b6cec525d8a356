#include "dynrf/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dynrf {

namespace {

constexpr char kMagic[4] = {'D', 'R', 'F', 'C'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return value;
}

void put_mlp(std::ostream& out, const nn::Mlp& net) {
  put<uint32_t>(out, uint32_t(net.layers.size()));
  put<int32_t>(out, int32_t(net.skip_layer));
  put<uint32_t>(out, uint32_t(net.skip_dim));
  for (const nn::Layer& l : net.layers) {
    put<uint32_t>(out, uint32_t(l.in_dim()));
    put<uint32_t>(out, uint32_t(l.out_dim()));
    put<uint8_t>(out, uint8_t(l.act));
    for (int r = 0; r < l.weight.rows(); ++r)
      for (int c = 0; c < l.weight.cols(); ++c) put<double>(out, l.weight(r, c));
    for (int r = 0; r < l.bias.size(); ++r) put<double>(out, l.bias[r]);
  }
}

nn::Mlp get_mlp(std::istream& in) {
  nn::Mlp net;
  const uint32_t layer_count = get<uint32_t>(in);
  net.skip_layer = get<int32_t>(in);
  net.skip_dim = int(get<uint32_t>(in));
  for (uint32_t k = 0; k < layer_count; ++k) {
    const uint32_t in_dim = get<uint32_t>(in);
    const uint32_t out_dim = get<uint32_t>(in);
    const uint8_t act = get<uint8_t>(in);
    if (act > uint8_t(nn::Activation::Sigmoid))
      throw std::runtime_error("checkpoint: unknown activation tag");
    nn::Layer l;
    l.act = nn::Activation(act);
    l.weight.resize(out_dim, in_dim);
    for (uint32_t r = 0; r < out_dim; ++r)
      for (uint32_t c = 0; c < in_dim; ++c) l.weight(r, c) = get<double>(in);
    l.bias.resize(out_dim);
    for (uint32_t r = 0; r < out_dim; ++r) l.bias[r] = get<double>(in);
    net.layers.push_back(std::move(l));
  }
  net.validate();
  return net;
}

void put_moments(std::ostream& out, const nn::Gradients& g) {
  for (size_t k = 0; k < g.weight.size(); ++k) {
    for (int r = 0; r < g.weight[k].rows(); ++r)
      for (int c = 0; c < g.weight[k].cols(); ++c) put<double>(out, g.weight[k](r, c));
    for (int r = 0; r < g.bias[k].size(); ++r) put<double>(out, g.bias[k][r]);
  }
}

void get_moments(std::istream& in, nn::Gradients& g) {
  for (size_t k = 0; k < g.weight.size(); ++k) {
    for (int r = 0; r < g.weight[k].rows(); ++r)
      for (int c = 0; c < g.weight[k].cols(); ++c) g.weight[k](r, c) = get<double>(in);
    for (int r = 0; r < g.bias[k].size(); ++r) g.bias[k][r] = get<double>(in);
  }
}

void put_adam(std::ostream& out, const nn::AdamState& s) {
  put<uint64_t>(out, s.step);
  put<double>(out, s.config.lr);
  put<double>(out, s.config.beta1);
  put<double>(out, s.config.beta2);
  put<double>(out, s.config.eps);
  put_moments(out, s.m);
  put_moments(out, s.v);
}

nn::AdamState get_adam(std::istream& in, const nn::Mlp& net) {
  nn::AdamState s = nn::make_adam_state(net, {});
  s.step = get<uint64_t>(in);
  s.config.lr = get<double>(in);
  s.config.beta1 = get<double>(in);
  s.config.beta2 = get<double>(in);
  s.config.eps = get<double>(in);
  get_moments(in, s.m);
  get_moments(in, s.v);
  return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ckpt.model.validate();
  ckpt.camera.validate();
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + tmp.string());

    out.write(kMagic, 4);
    put<uint32_t>(out, kVersion);

    const fields::EncodingConfig& e = ckpt.model.encoding;
    put<uint32_t>(out, uint32_t(e.levels_position));
    put<uint32_t>(out, uint32_t(e.levels_direction));
    put<uint32_t>(out, uint32_t(e.levels_time));
    put<uint8_t>(out, e.include_input ? 1 : 0);

    const render::Camera& c = ckpt.camera;
    put<double>(out, c.fx);
    put<double>(out, c.fy);
    put<double>(out, c.cx);
    put<double>(out, c.cy);
    put<uint32_t>(out, uint32_t(c.width));
    put<uint32_t>(out, uint32_t(c.height));
    put<double>(out, c.znear);
    put<double>(out, c.zfar);
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) put<double>(out, c.rot(r, col));
      put<double>(out, c.trans[r]);
    }

    put<uint32_t>(out, uint32_t(ckpt.samples_per_ray));
    put_mlp(out, ckpt.model.theta);
    put_mlp(out, ckpt.model.phi);

    const bool has_adam = ckpt.theta_adam.has_value() && ckpt.phi_adam.has_value();
    put<uint8_t>(out, has_adam ? 1 : 0);
    if (has_adam) {
      put_adam(out, *ckpt.theta_adam);
      put_adam(out, *ckpt.phi_adam);
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  if (get<uint32_t>(in) != kVersion)
    throw std::runtime_error("checkpoint: unsupported version in " + path.string());

  Checkpoint ckpt;
  fields::EncodingConfig e;
  e.levels_position = int(get<uint32_t>(in));
  e.levels_direction = int(get<uint32_t>(in));
  e.levels_time = int(get<uint32_t>(in));
  e.include_input = get<uint8_t>(in) != 0;
  ckpt.model.encoding = e;

  render::Camera& c = ckpt.camera;
  c.fx = get<double>(in);
  c.fy = get<double>(in);
  c.cx = get<double>(in);
  c.cy = get<double>(in);
  c.width = int(get<uint32_t>(in));
  c.height = int(get<uint32_t>(in));
  c.znear = get<double>(in);
  c.zfar = get<double>(in);
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < 3; ++col) c.rot(r, col) = get<double>(in);
    c.trans[r] = get<double>(in);
  }
  c.validate();

  ckpt.samples_per_ray = int(get<uint32_t>(in));
  ckpt.model.theta = get_mlp(in);
  ckpt.model.phi = get_mlp(in);
  ckpt.model.validate();

  if (get<uint8_t>(in) != 0) {
    ckpt.theta_adam = get_adam(in, ckpt.model.theta);
    ckpt.phi_adam = get_adam(in, ckpt.model.phi);
  }
  return ckpt;
}

}  // namespace dynrf
