#include "chdqn/neural_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "chdqn/errors.hpp"
#include "chdqn/numeric_text.hpp"

namespace chdqn {

std::size_t parameter_count(const NetworkSpec& spec) {
  std::size_t total = 0;
  std::size_t in = spec.input_dim;
  for (std::size_t width : spec.hidden) {
    total += width * in + width;
    in = width;
  }
  return total + spec.output_dim * in + spec.output_dim;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  if (spec_.input_dim == 0 || spec_.output_dim == 0) {
    throw ConfigError("network input and output dimensions must be >= 1");
  }
  std::size_t in = spec_.input_dim;
  std::size_t offset = 0;
  auto add = [&](std::size_t out, Activation act) {
    if (out == 0) throw ConfigError("hidden layer width must be >= 1");
    layers_.push_back({in, out, act, offset});
    offset += out * in + out;
    in = out;
  };
  for (std::size_t width : spec_.hidden) add(width, Activation::kRelu);
  add(spec_.output_dim, Activation::kIdentity);
  params_.assign(offset, 0.0);

  activations_.resize(layers_.size() + 1);
  activations_[0].resize(spec_.input_dim);
  std::size_t widest = spec_.input_dim;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    activations_[l + 1].resize(layers_[l].out);
    widest = std::max(widest, layers_[l].out);
  }
  delta_.resize(widest);
  delta_prev_.resize(widest);
}

void Network::init_glorot(Rng& rng) {
  cache_valid_ = false;
  for (const auto& slot : layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(slot.in + slot.out));
    double* w = params_.data() + slot.offset;
    for (std::size_t i = 0; i < slot.out * slot.in; ++i) w[i] = rng.uniform(-limit, limit);
    std::fill_n(w + slot.out * slot.in, slot.out, 0.0);
  }
}

DenseLayer Network::layer(std::size_t index) const {
  const auto& slot = layers_.at(index);
  std::span<const double> all(params_);
  return {slot.in, slot.out, slot.activation, all.subspan(slot.offset, slot.out * slot.in),
          all.subspan(slot.offset + slot.out * slot.in, slot.out)};
}

std::span<double> Network::mutable_parameters() {
  cache_valid_ = false;
  return params_;
}

std::span<double> Network::mutable_weights(std::size_t index) {
  const auto& slot = layers_.at(index);
  return mutable_parameters().subspan(slot.offset, slot.out * slot.in);
}

std::span<double> Network::mutable_biases(std::size_t index) {
  const auto& slot = layers_.at(index);
  return mutable_parameters().subspan(slot.offset + slot.out * slot.in, slot.out);
}

namespace {

void dense_forward(const double* w, const double* b, std::size_t in, std::size_t out,
                   Activation act, const double* x, double* y) {
  for (std::size_t o = 0; o < out; ++o) {
    const double* row = w + o * in;
    double sum = b[o];
    for (std::size_t i = 0; i < in; ++i) sum += row[i] * x[i];
    y[o] = (act == Activation::kRelu && sum <= 0.0) ? 0.0 : sum;
  }
}

void check_input(std::span<const double> input, std::size_t expected) {
  if (input.size() != expected) {
    throw ConfigError("network input has dimension " + std::to_string(input.size()) +
                      ", expected " + std::to_string(expected));
  }
}

}  // namespace

std::vector<double> Network::forward(std::span<const double> input) const {
  check_input(input, spec_.input_dim);
  std::vector<double> x(input.begin(), input.end());
  std::vector<double> y;
  for (const auto& slot : layers_) {
    y.resize(slot.out);
    const double* w = params_.data() + slot.offset;
    dense_forward(w, w + slot.out * slot.in, slot.in, slot.out, slot.activation, x.data(),
                  y.data());
    std::swap(x, y);
  }
  return x;
}

std::span<const double> Network::forward_cached(std::span<const double> input) {
  check_input(input, spec_.input_dim);
  std::copy(input.begin(), input.end(), activations_[0].begin());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& slot = layers_[l];
    const double* w = params_.data() + slot.offset;
    dense_forward(w, w + slot.out * slot.in, slot.in, slot.out, slot.activation,
                  activations_[l].data(), activations_[l + 1].data());
  }
  cache_valid_ = true;
  return activations_.back();
}

double Network::accumulate_gradient(std::size_t action, double target,
                                    std::span<double> gradient, double scale) {
  if (!cache_valid_) throw UsageError("accumulate_gradient called without a cached forward pass");
  if (action >= spec_.output_dim) throw UsageError("action index out of range");
  if (gradient.size() != params_.size()) throw ConfigError("gradient buffer has wrong size");

  const double error = activations_.back()[action] - target;
  std::fill_n(delta_.begin(), spec_.output_dim, 0.0);
  delta_[action] = scale * 2.0 * error;

  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& slot = layers_[l];
    const double* x = activations_[l].data();
    const double* w = params_.data() + slot.offset;
    double* gw = gradient.data() + slot.offset;
    double* gb = gw + slot.out * slot.in;
    for (std::size_t o = 0; o < slot.out; ++o) {
      const double d = delta_[o];
      if (d == 0.0) continue;
      gb[o] += d;
      double* grow = gw + o * slot.in;
      for (std::size_t i = 0; i < slot.in; ++i) grow[i] += d * x[i];
    }
    if (l == 0) break;
    std::fill_n(delta_prev_.begin(), slot.in, 0.0);
    for (std::size_t o = 0; o < slot.out; ++o) {
      const double d = delta_[o];
      if (d == 0.0) continue;
      const double* row = w + o * slot.in;
      for (std::size_t i = 0; i < slot.in; ++i) delta_prev_[i] += row[i] * d;
    }
    // Previous layer is a relu hidden layer: zero where it was inactive.
    for (std::size_t i = 0; i < slot.in; ++i) {
      if (x[i] <= 0.0) delta_prev_[i] = 0.0;
    }
    std::swap(delta_, delta_prev_);
  }
  return error * error;
}

void copy_weights(const Network& src, Network& dst) {
  if (!(src.spec() == dst.spec())) throw ConfigError("copy_weights: network specs differ");
  auto from = src.parameters();
  std::copy(from.begin(), from.end(), dst.mutable_parameters().begin());
}

AdamState::AdamState(std::size_t parameter_count, AdamConfig config)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 || config.beta2 >= 1.0) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != state.m_.size() || grads.size() != state.m_.size()) {
    throw ConfigError("adam_step: parameter, gradient and moment shapes differ");
  }
  const auto& c = state.config_;
  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m_[i] = c.beta1 * state.m_[i] + (1.0 - c.beta1) * g;
    state.v_[i] = c.beta2 * state.v_[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.m_[i] / correction1;
    const double v_hat = state.v_[i] / correction2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

double clip_gradient_norm(std::span<double> gradient, double max_norm) {
  double sq = 0.0;
  for (double g : gradient) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (double& g : gradient) g *= factor;
  }
  return norm;
}

void save_weights(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "chdqn-weights 1\n";
  out << "layers " << net.layer_count() << '\n';
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto layer = net.layer(l);
    out << "dense " << layer.in << ' ' << layer.out << ' '
        << (layer.activation == Activation::kRelu ? "relu" : "identity") << '\n';
  }
  for (double p : net.parameters()) out << format_double(p) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

Network load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  int version = 0;
  std::string key;
  std::size_t layer_count = 0;
  if (!(in >> magic >> version) || magic != "chdqn-weights" || version != 1) {
    throw DataError(path.string() + ": not a chdqn weight file");
  }
  if (!(in >> key >> layer_count) || key != "layers" || layer_count == 0) {
    throw DataError(path.string() + ": bad layer header");
  }
  NetworkSpec spec;
  std::size_t prev_out = 0;
  for (std::size_t l = 0; l < layer_count; ++l) {
    std::size_t n_in = 0, n_out = 0;
    std::string act;
    if (!(in >> key >> n_in >> n_out >> act) || key != "dense") {
      throw DataError(path.string() + ": bad layer line");
    }
    const bool last = l + 1 == layer_count;
    if (act != (last ? "identity" : "relu")) {
      throw DataError(path.string() + ": unsupported activation layout");
    }
    if (l == 0) {
      spec.input_dim = n_in;
    } else if (n_in != prev_out) {
      throw DataError(path.string() + ": layer shapes do not chain");
    }
    if (last) {
      spec.output_dim = n_out;
    } else {
      spec.hidden.push_back(n_out);
    }
    prev_out = n_out;
  }
  Network net(spec);
  auto params = net.mutable_parameters();
  std::string token;
  for (double& p : params) {
    if (!(in >> token)) throw DataError(path.string() + ": truncated parameter list");
    p = parse_double(token);
  }
  if (in >> token) throw DataError(path.string() + ": trailing data");
  return net;
}

}  // namespace chdqn
