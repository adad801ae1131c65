#include "chdqn/dqn_agent.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "chdqn/errors.hpp"

namespace chdqn {

std::string ModelSpec::label() const {
  return arch == Architecture::kMlp ? "mlp" : "cheb" + std::to_string(degree);
}

ModelSpec ModelSpec::parse(std::string_view label) {
  if (label == "mlp") return mlp();
  if (label.starts_with("cheb") && label.size() > 4) {
    int degree = -1;
    const char* first = label.data() + 4;
    const char* last = label.data() + label.size();
    auto [end, ec] = std::from_chars(first, last, degree);
    if (ec == std::errc{} && end == last && degree >= 0) return chebyshev(degree);
  }
  throw ConfigError("unknown model '" + std::string(label) + "' (expected mlp or cheb<N>)");
}

double EpsilonSchedule::at(std::uint64_t step) const {
  if (decay_steps == 0 || step >= decay_steps) return end;
  const double fraction = static_cast<double>(step) / static_cast<double>(decay_steps);
  return start + (end - start) * fraction;
}

void AgentConfig::validate() const {
  if (model.arch == Architecture::kChebyshev && model.degree < 0) {
    throw ConfigError("Chebyshev degree must be >= 0");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (buffer_capacity == 0) throw ConfigError("buffer capacity must be >= 1");
  if (target_update_period == 0) throw ConfigError("target update period must be >= 1");
  if (!(epsilon.start >= epsilon.end && epsilon.end >= 0.0 && epsilon.start <= 1.0)) {
    throw ConfigError("epsilon schedule requires 1 >= start >= end >= 0");
  }
  if (episodes == 0) throw ConfigError("episode budget must be >= 1");
  if (grad_clip_norm < 0.0) throw ConfigError("gradient clip norm must be >= 0");
  if (shaping_coefficient && *shaping_coefficient < 0.0) {
    throw ConfigError("shaping coefficient must be >= 0");
  }
  for (std::size_t width : hidden) {
    if (width == 0) throw ConfigError("hidden layer widths must be >= 1");
  }
}

InputPipeline::InputPipeline(NormalizationSpec normalization, ModelSpec model)
    : normalization_(std::move(normalization)) {
  if (model.arch == Architecture::kChebyshev) basis_.emplace(model.degree, normalization_.dim());
}

std::size_t InputPipeline::input_dim() const {
  return basis_ ? basis_->feature_dim() : normalization_.dim();
}

void InputPipeline::transform(std::span<const double> observation, std::span<double> out) const {
  if (!basis_) {
    normalization_.normalize_into(observation, out);
    return;
  }
  if (observation.size() != normalization_.dim() || out.size() != basis_->feature_dim()) {
    throw ConfigError("input pipeline: dimension mismatch");
  }
  const std::size_t stride = static_cast<std::size_t>(basis_->degree()) + 1;
  for (std::size_t d = 0; d < observation.size(); ++d) {
    chebyshev_t_sequence(normalization_.normalize_component(d, observation[d]),
                         out.subspan(d * stride, stride));
  }
}

std::vector<double> InputPipeline::transform(std::span<const double> observation) const {
  std::vector<double> out(input_dim());
  transform(observation, out);
  return out;
}

NetworkSpec network_spec_for(EnvId env, const ModelSpec& model,
                             const std::vector<std::size_t>& hidden) {
  const auto probe = make_environment(env);
  const std::size_t dim = probe->observation_dim();
  const std::size_t input =
      model.arch == Architecture::kChebyshev ? dim * static_cast<std::size_t>(model.degree + 1) : dim;
  return {input, hidden, probe->action_count()};
}

namespace {

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < values.size(); ++a) {
    if (values[a] > values[best]) best = a;
  }
  return best;
}

}  // namespace

Agent::Agent(AgentConfig config, EnvId env, Rng& init_rng)
    : config_((config.validate(), std::move(config))),
      env_(env),
      action_count_(make_environment(env)->action_count()),
      pipeline_(default_normalization(env), config_.model),
      policy_(network_spec_for(env, config_.model, config_.hidden)),
      target_(policy_.spec()),
      adam_(policy_.parameter_count(), AdamConfig{.learning_rate = config_.learning_rate}),
      buffer_(config_.buffer_capacity),
      gradient_(policy_.parameter_count(), 0.0),
      input_(pipeline_.input_dim()) {
  policy_.init_glorot(init_rng);
  sync_target();
}

std::vector<double> Agent::q_values(std::span<const double> observation) const {
  return policy_.forward(pipeline_.transform(observation));
}

std::vector<double> Agent::target_q_values(std::span<const double> observation) const {
  return target_.forward(pipeline_.transform(observation));
}

int Agent::greedy_action(std::span<const double> observation) const {
  return static_cast<int>(argmax_lowest(q_values(observation)));
}

int Agent::select_action(std::span<const double> observation, Rng& rng) const {
  if (rng.uniform() < epsilon()) return static_cast<int>(rng.index(action_count_));
  return greedy_action(observation);
}

double Agent::compute_target(const Transition& transition) const {
  if (transition.terminal) return transition.reward;
  const auto next_q = target_q_values(transition.next_state);
  return transition.reward + config_.gamma * *std::max_element(next_q.begin(), next_q.end());
}

std::optional<double> Agent::learn_step(Rng& rng) {
  const std::size_t needed = std::max(config_.warmup_steps, config_.batch_size);
  if (buffer_.size() < needed) return std::nullopt;
  const auto batch = buffer_.sample(config_.batch_size, rng);
  if (!batch) return std::nullopt;

  // Targets come from the frozen network before any parameter moves.
  std::vector<double> targets;
  targets.reserve(batch->size());
  for (const Transition* t : *batch) targets.push_back(compute_target(*t));

  std::fill(gradient_.begin(), gradient_.end(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch->size());
  double loss = 0.0;
  for (std::size_t j = 0; j < batch->size(); ++j) {
    const Transition& t = *(*batch)[j];
    pipeline_.transform(t.state, input_);
    policy_.forward_cached(input_);
    loss += policy_.accumulate_gradient(static_cast<std::size_t>(t.action), targets[j], gradient_,
                                        scale);
  }
  if (config_.grad_clip_norm > 0.0) clip_gradient_norm(gradient_, config_.grad_clip_norm);
  adam_step(policy_.mutable_parameters(), gradient_, adam_);
  return loss * scale;
}

bool Agent::maybe_sync_target() {
  if (global_step_ == 0 || global_step_ % config_.target_update_period != 0) return false;
  sync_target();
  return true;
}

void Agent::sync_target() { copy_weights(policy_, target_); }

void Agent::remember(Transition transition) { buffer_.push(std::move(transition)); }

EpisodeRecord Agent::run_episode(Environment& env, Rng& rng) {
  if (env.id() != env_) throw ConfigError("agent was built for " + env_name(env_));
  if (env.steps() != 0 || env.state().done()) {
    throw UsageError("run_episode needs a freshly reset environment");
  }
  std::optional<ShapingSpec> shaping;
  if (config_.shaping_coefficient) shaping = ShapingSpec{*config_.shaping_coefficient, config_.gamma};

  EpisodeRecord record;
  record.episode = ++episodes_;
  double loss_sum = 0.0;
  std::size_t updates = 0;
  while (!env.state().done()) {
    std::vector<double> observation = env.state().observation;
    record.epsilon = epsilon();
    const int action = select_action(observation, rng);

    StepResult result;
    double learning_reward = 0.0;
    if (shaping) {
      ShapedStep shaped = shaped_step(env, action, *shaping);
      result = std::move(shaped.raw);
      learning_reward = shaped.shaped_reward;
    } else {
      result = env.step(action);
      learning_reward = result.reward;
    }
    record.raw_return += result.reward;
    ++record.steps;

    const bool terminal =
        result.state.terminated || (result.state.truncated && !config_.bootstrap_on_truncation);
    remember({std::move(observation), action, learning_reward, std::move(result.state.observation),
              terminal});
    ++global_step_;

    if (config_.learning_enabled) {
      if (auto loss = learn_step(rng)) {
        loss_sum += *loss;
        ++updates;
      }
    }
    maybe_sync_target();
  }
  record.global_step = global_step_;
  record.loss_mean =
      updates > 0 ? loss_sum / static_cast<double>(updates) : std::numeric_limits<double>::quiet_NaN();
  return record;
}

}  // namespace chdqn
