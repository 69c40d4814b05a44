#include "simbridge/nets.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "simbridge/errors.hpp"

namespace simbridge {

namespace {

std::size_t flat_param_count(const std::vector<int>& sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    n += static_cast<std::size_t>(sizes[l] + 1) * sizes[l + 1];
  }
  return n;
}

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) {
    throw ContractViolation("Mlp: need at least input and output layer");
  }
  for (int s : sizes) {
    if (s <= 0) throw ContractViolation("Mlp: layer sizes must be positive");
  }
}

// z[o] += x_i * W_row[o] over a contiguous row; saxpy form vectorizes
// without reassociation.
inline void axpy(double a, const double* row, double* z, int n) {
  for (int o = 0; o < n; ++o) z[o] += a * row[o];
}

inline double dot(const double* a, const double* b, int n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void write_f64_le(std::ostream& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64_le(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string to_string(Activation a) {
  return a == Activation::relu ? "relu" : "tanh";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ContractViolation("unknown activation: " + s);
}

Mlp::Mlp(std::vector<int> sizes, Activation hidden)
    : sizes_(std::move(sizes)), hidden_(hidden) {
  check_sizes(sizes_);
  params_.assign(flat_param_count(sizes_), 0.0);
}

Mlp Mlp::init(std::vector<int> sizes, Activation hidden, Rng& rng) {
  Mlp net(std::move(sizes), hidden);
  std::size_t off = 0;
  for (int l = 0; l + 1 < static_cast<int>(net.sizes_.size()); ++l) {
    const int in = net.sizes_[l];
    const int out = net.sizes_[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    for (int i = 0; i < in * out; ++i) {
      net.params_[off + i] = rng.uniform(-limit, limit);
    }
    off += static_cast<std::size_t>(in + 1) * out;  // biases stay zero
  }
  return net;
}

std::span<const double> Mlp::forward_cached(std::span<const double> input,
                                            MlpScratch& ws) const {
  if (static_cast<int>(input.size()) != input_dim()) {
    throw ContractViolation("Mlp::forward: input length mismatch");
  }
  const int layers = layer_count();
  ws.acts.resize(layers + 1);
  ws.pre.resize(layers);
  ws.acts[0].assign(input.begin(), input.end());

  const double* w = params_.data();
  for (int l = 0; l < layers; ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double* bias = w + static_cast<std::size_t>(in) * out;
    auto& z = ws.pre[l];
    z.assign(bias, bias + out);
    const double* x = ws.acts[l].data();
    for (int i = 0; i < in; ++i) {
      const double xi = x[i];
      if (xi != 0.0) axpy(xi, w + static_cast<std::size_t>(i) * out, z.data(), out);
    }
    auto& a = ws.acts[l + 1];
    a.resize(out);
    if (l + 1 == layers) {
      a = z;  // linear output layer
    } else if (hidden_ == Activation::relu) {
      for (int o = 0; o < out; ++o) a[o] = z[o] > 0.0 ? z[o] : 0.0;
    } else {
      for (int o = 0; o < out; ++o) a[o] = std::tanh(z[o]);
    }
    w += static_cast<std::size_t>(in + 1) * out;
  }
  return ws.acts[layers];
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  MlpScratch ws;
  auto out = forward_cached(input, ws);
  return {out.begin(), out.end()};
}

void Mlp::backward(std::span<const double> upstream,
                   std::span<double> param_grad, std::span<double> input_grad,
                   MlpScratch& ws) const {
  const int layers = layer_count();
  if (static_cast<int>(upstream.size()) != output_dim()) {
    throw ContractViolation("Mlp::backward: upstream length mismatch");
  }
  const bool want_params = !param_grad.empty();
  if (want_params && param_grad.size() != params_.size()) {
    throw ContractViolation("Mlp::backward: param_grad length mismatch");
  }
  if (!input_grad.empty() &&
      static_cast<int>(input_grad.size()) != input_dim()) {
    throw ContractViolation("Mlp::backward: input_grad length mismatch");
  }
  if (static_cast<int>(ws.acts.size()) != layers + 1) {
    throw ContractViolation("Mlp::backward: run forward_cached first");
  }

  ws.delta.resize(layers);
  ws.delta[layers - 1].assign(upstream.begin(), upstream.end());

  // layer parameter offsets
  std::vector<std::size_t> offs(layers);
  std::size_t off = 0;
  for (int l = 0; l < layers; ++l) {
    offs[l] = off;
    off += static_cast<std::size_t>(sizes_[l] + 1) * sizes_[l + 1];
  }

  for (int l = layers - 1; l >= 0; --l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double* w = params_.data() + offs[l];
    const double* d = ws.delta[l].data();
    const double* a_prev = ws.acts[l].data();

    if (want_params) {
      double* wg = param_grad.data() + offs[l];
      double* bg = wg + static_cast<std::size_t>(in) * out;
      for (int o = 0; o < out; ++o) bg[o] += d[o];
      for (int i = 0; i < in; ++i) {
        const double ai = a_prev[i];
        if (ai != 0.0) axpy(ai, d, wg + static_cast<std::size_t>(i) * out, out);
      }
    }

    const bool need_prev = l > 0 || !input_grad.empty();
    if (!need_prev) continue;

    if (l > 0) {
      auto& dprev = ws.delta[l - 1];
      dprev.resize(in);
      const auto& z_prev = ws.pre[l - 1];
      if (hidden_ == Activation::relu) {
        for (int i = 0; i < in; ++i) {
          dprev[i] = z_prev[i] > 0.0
                         ? dot(w + static_cast<std::size_t>(i) * out, d, out)
                         : 0.0;
        }
      } else {
        for (int i = 0; i < in; ++i) {
          const double t = std::tanh(z_prev[i]);
          dprev[i] = (1.0 - t * t) *
                     dot(w + static_cast<std::size_t>(i) * out, d, out);
        }
      }
    } else {
      for (int i = 0; i < in; ++i) {
        input_grad[i] = dot(w + static_cast<std::size_t>(i) * out, d, out);
      }
    }
  }
}

Mlp::Gradients Mlp::grad(std::span<const double> input,
                         std::span<const double> upstream) const {
  MlpScratch ws;
  forward_cached(input, ws);
  Gradients g;
  g.param_grad.assign(params_.size(), 0.0);
  g.input_grad.assign(input.size(), 0.0);
  backward(upstream, g.param_grad, g.input_grad, ws);
  return g;
}

void Mlp::save(std::ostream& out) const {
  out << "mlp " << to_string(hidden_) << ' ' << sizes_.size();
  for (int s : sizes_) out << ' ' << s;
  out << '\n';
  for (double p : params_) write_f64_le(out, p);
}

Mlp Mlp::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ContractViolation("Mlp::load: missing header");
  }
  std::istringstream header(line);
  std::string magic, act;
  std::size_t n_layers = 0;
  header >> magic >> act >> n_layers;
  if (!header || magic != "mlp" || n_layers < 2) {
    throw ContractViolation("Mlp::load: malformed header");
  }
  std::vector<int> sizes(n_layers);
  for (auto& s : sizes) {
    header >> s;
    if (!header || s <= 0) throw ContractViolation("Mlp::load: bad layer size");
  }
  Mlp net(std::move(sizes), activation_from_string(act));
  for (auto& p : net.params_) {
    p = read_f64_le(in);
    if (!in) throw ContractViolation("Mlp::load: truncated parameter block");
    if (!std::isfinite(p)) {
      throw ContractViolation("Mlp::load: non-finite parameter");
    }
  }
  return net;
}

void Mlp::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractViolation("Mlp::save_file: cannot open " + path);
  save(out);
}

Mlp Mlp::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractViolation("Mlp::load_file: cannot open " + path);
  return load(in);
}

void polyak_update(Mlp& target, const Mlp& online, double rate) {
  if (target.layer_sizes() != online.layer_sizes()) {
    throw ContractViolation("polyak_update: topology mismatch");
  }
  auto t = target.params();
  auto o = online.params();
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = (1.0 - rate) * t[i] + rate * o[i];
  }
}

}  // namespace simbridge
