#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chdqn/chebyshev.hpp"
#include "chdqn/environments.hpp"
#include "chdqn/neural_net.hpp"
#include "chdqn/random.hpp"
#include "chdqn/replay_buffer.hpp"

namespace chdqn {

enum class Architecture { kMlp, kChebyshev };

/// Which input pipeline feeds the Q-network.
struct ModelSpec {
  Architecture arch = Architecture::kMlp;
  int degree = 0;  // only meaningful for kChebyshev

  static ModelSpec mlp() { return {Architecture::kMlp, 0}; }
  static ModelSpec chebyshev(int degree) { return {Architecture::kChebyshev, degree}; }

  /// "mlp" or "cheb<N>".
  std::string label() const;
  /// Parses label(); throws ConfigError.
  static ModelSpec parse(std::string_view label);

  bool operator==(const ModelSpec&) const = default;
};

/// Linear decay from `start` to `end` over `decay_steps` global steps.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  std::uint64_t decay_steps = 10'000;

  double at(std::uint64_t step) const;
};

struct AgentConfig {
  ModelSpec model = ModelSpec::chebyshev(4);
  std::vector<std::size_t> hidden{64, 64};
  double gamma = 0.99;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = 50'000;
  std::uint64_t target_update_period = 500;  // environment steps
  EpsilonSchedule epsilon;
  std::size_t warmup_steps = 1'000;  // buffer size before the first update
  std::size_t episodes = 500;
  bool bootstrap_on_truncation = true;
  double grad_clip_norm = 0.0;  // 0 disables clipping
  std::optional<double> shaping_coefficient;  // Acrobot potential shaping
  bool learning_enabled = true;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Per-episode outcome. `raw_return` never includes shaping.
struct EpisodeRecord {
  std::size_t episode = 0;  // 1-based
  std::size_t steps = 0;
  double raw_return = 0.0;
  double epsilon = 0.0;  // exploration rate at the episode's last action
  std::uint64_t global_step = 0;  // after the episode
  double loss_mean = 0.0;  // NaN when no update happened
};

/// Observation -> network input: normalize, then (Chebyshev only) featurize.
class InputPipeline {
 public:
  InputPipeline(NormalizationSpec normalization, ModelSpec model);

  std::size_t input_dim() const;
  void transform(std::span<const double> observation, std::span<double> out) const;
  std::vector<double> transform(std::span<const double> observation) const;

 private:
  NormalizationSpec normalization_;
  std::optional<ChebyshevBasis> basis_;
};

/// Network topology for a model on an environment with the given hidden widths.
NetworkSpec network_spec_for(EnvId env, const ModelSpec& model,
                             const std::vector<std::size_t>& hidden);

/// Deep Q-learning agent with experience replay and a periodically
/// hard-synchronized target network. The MLP baseline and the Chebyshev
/// variant share everything but the input pipeline.
class Agent {
 public:
  /// Draws initial weights from `init_rng`; the target starts as a copy.
  Agent(AgentConfig config, EnvId env, Rng& init_rng);

  const AgentConfig& config() const { return config_; }
  EnvId env() const { return env_; }
  std::size_t action_count() const { return action_count_; }

  std::vector<double> q_values(std::span<const double> observation) const;
  std::vector<double> target_q_values(std::span<const double> observation) const;

  /// argmax_a Q(s, a); the lowest index wins ties.
  int greedy_action(std::span<const double> observation) const;

  /// Epsilon-greedy at the current global step. Always draws one uniform
  /// from rng, plus one index draw when exploring.
  int select_action(std::span<const double> observation, Rng& rng) const;

  double epsilon() const { return config_.epsilon.at(global_step_); }

  /// r for terminal transitions, else r + gamma * max_a' Q(s', a'; target).
  double compute_target(const Transition& transition) const;

  /// One Adam step on the mean squared TD error of a sampled minibatch.
  /// nullopt (and no mutation) while the buffer is below warm-up or batch size.
  std::optional<double> learn_step(Rng& rng);

  /// Hard copy policy -> target when the global step is a multiple of C.
  bool maybe_sync_target();
  void sync_target();

  /// Runs one episode on a freshly reset environment: select, step, store,
  /// learn, maybe sync, until termination or truncation.
  EpisodeRecord run_episode(Environment& env, Rng& rng);

  void remember(Transition transition);

  std::uint64_t global_step() const { return global_step_; }
  std::size_t episodes_completed() const { return episodes_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const Network& policy() const { return policy_; }
  const Network& target() const { return target_; }
  Network& mutable_policy() { return policy_; }
  Network& mutable_target() { return target_; }
  const InputPipeline& pipeline() const { return pipeline_; }

 private:
  AgentConfig config_;
  EnvId env_;
  std::size_t action_count_;
  InputPipeline pipeline_;
  Network policy_;
  Network target_;
  AdamState adam_;
  ReplayBuffer buffer_;
  std::vector<double> gradient_;
  std::vector<double> input_;
  std::uint64_t global_step_ = 0;
  std::size_t episodes_ = 0;
};

}  // namespace chdqn
