#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "simbridge/rng.hpp"

namespace simbridge {

enum class Activation { relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Reusable forward/backward buffers. One per thread of use; an Mlp never
// stores activations itself.
struct MlpScratch {
  // acts[l] holds the post-activation of layer l (acts[0] = input copy);
  // pre[l] holds the pre-activation of layer l+1.
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> delta;
};

// Fixed-topology multilayer perceptron over a flat parameter vector.
//
// Per layer the layout is the weight matrix stored input-major
// (w[i*out + o]), then the bias vector, so the flat length is
// sum_i (sizes[i]+1) * sizes[i+1]. Hidden layers use the configured
// activation; the output layer is linear. forward/grad are pure functions
// of (params, input): all state lives in the caller's scratch.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> sizes, Activation hidden);  // zero-initialized params

  // Weights uniform in +/- sqrt(6/(fan_in+fan_out)), biases zero.
  static Mlp init(std::vector<int> sizes, Activation hidden, Rng& rng);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation activation() const { return hidden_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  // Convenience allocating forward.
  std::vector<double> forward(std::span<const double> input) const;

  // Two-phase API used by training loops: forward keeps activations in the
  // scratch, backward seeds the output with `upstream` and accumulates the
  // gradient of <output, upstream>.
  std::span<const double> forward_cached(std::span<const double> input,
                                         MlpScratch& scratch) const;

  // param_grad is accumulated (+=) and must be param_count() long, or empty
  // to skip parameter accumulation entirely (input-gradient-only passes).
  // input_grad, when non-empty, is overwritten and must be input_dim() long.
  void backward(std::span<const double> upstream, std::span<double> param_grad,
                std::span<double> input_grad, MlpScratch& scratch) const;

  // One-call exact reverse-mode gradient, allocating variant.
  struct Gradients {
    std::vector<double> param_grad;
    std::vector<double> input_grad;
  };
  Gradients grad(std::span<const double> input,
                 std::span<const double> upstream) const;

  // Checkpoint format: one text header line with the activation tag and
  // layer sizes, then the flat vector as little-endian 64-bit floats.
  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);
  void save_file(const std::string& path) const;
  static Mlp load_file(const std::string& path);

 private:
  std::vector<int> sizes_;
  Activation hidden_ = Activation::relu;
  std::vector<double> params_;
};

// Exponential moving average of parameters: target <- (1-rate)*target +
// rate*online. Topologies must match.
void polyak_update(Mlp& target, const Mlp& online, double rate);

}  // namespace simbridge
