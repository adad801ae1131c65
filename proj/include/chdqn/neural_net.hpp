#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "chdqn/random.hpp"

namespace chdqn {

enum class Activation { kRelu, kIdentity };

/// Dense feed-forward topology: relu hidden layers, identity output layer.
/// An empty `hidden` list gives a single linear layer.
struct NetworkSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 0;

  bool operator==(const NetworkSpec&) const = default;
};

/// Sum over layers of out * in + out.
std::size_t parameter_count(const NetworkSpec& spec);

/// Read-only view of one layer inside a Network's flat parameter storage.
/// Weights are row-major [out x in].
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::kIdentity;
  std::span<const double> weights;
  std::span<const double> biases;

  std::size_t parameter_count() const { return out * in + out; }
};

/// Multi-layer perceptron with all parameters stored contiguously, layer by
/// layer, each layer as [weights (row-major), biases]. Gradient buffers and
/// optimizer moments use the same flat layout.
class Network {
 public:
  /// Zero-initialized network.
  explicit Network(NetworkSpec spec);

  /// Uniform Glorot weights (limit sqrt(6 / (in + out))), zero biases.
  void init_glorot(Rng& rng);

  const NetworkSpec& spec() const { return spec_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::size_t layer_count() const { return layers_.size(); }
  DenseLayer layer(std::size_t index) const;

  std::span<const double> parameters() const { return params_; }
  /// Mutable access; drops any cached forward pass.
  std::span<double> mutable_parameters();
  std::span<double> mutable_weights(std::size_t layer);
  std::span<double> mutable_biases(std::size_t layer);

  /// Q(s, .) for every output. Pure function of (parameters, input).
  std::vector<double> forward(std::span<const double> input) const;

  /// Forward pass that keeps the activations for a following
  /// accumulate_gradient() call. Returns the output layer.
  std::span<const double> forward_cached(std::span<const double> input);

  /// Adds scale * d/dtheta (target - Q(s, action))^2 into `gradient`, using the
  /// activations cached by the last forward_cached(). Returns the squared error.
  double accumulate_gradient(std::size_t action, double target, std::span<double> gradient,
                             double scale = 1.0);

  bool has_cached_forward() const { return cache_valid_; }

 private:
  struct LayerSlot {
    std::size_t in;
    std::size_t out;
    Activation activation;
    std::size_t offset;  // weights start; biases follow at offset + out * in
  };

  NetworkSpec spec_;
  std::vector<LayerSlot> layers_;
  std::vector<double> params_;

  // activations_[0] is the input, activations_[l + 1] the output of layer l.
  std::vector<std::vector<double>> activations_;
  std::vector<double> delta_;
  std::vector<double> delta_prev_;
  bool cache_valid_ = false;
};

/// Hard copy of parameters; optimizer state is not involved.
void copy_weights(const Network& src, Network& dst);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moments for a flat parameter vector.
class AdamState {
 public:
  AdamState(std::size_t parameter_count, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  std::uint64_t step() const { return step_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

 private:
  friend void adam_step(std::span<double>, std::span<const double>, AdamState&);

  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

/// Rescales `gradient` so its L2 norm is at most max_norm. Returns the norm before clipping.
double clip_gradient_norm(std::span<double> gradient, double max_norm);

/// Text checkpoint:
///   chdqn-weights 1
///   layers <L>
///   dense <in> <out> <relu|identity>     (L lines)
///   <parameter>                          (one per line, shortest round-trip decimal)
void save_weights(const Network& net, const std::filesystem::path& path);
Network load_weights(const std::filesystem::path& path);

}  // namespace chdqn
