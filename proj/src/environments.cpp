#include "chdqn/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "chdqn/errors.hpp"

namespace chdqn {

EnvId parse_env_id(std::string_view name) {
  if (name == "cartpole-v1") return EnvId::kCartPole;
  if (name == "mountaincar-v0") return EnvId::kMountainCar;
  if (name == "acrobot-v1") return EnvId::kAcrobot;
  throw ConfigError("unknown environment '" + std::string(name) +
                    "' (expected cartpole-v1, mountaincar-v0 or acrobot-v1)");
}

std::string env_name(EnvId id) {
  switch (id) {
    case EnvId::kCartPole: return "cartpole-v1";
    case EnvId::kMountainCar: return "mountaincar-v0";
    case EnvId::kAcrobot: return "acrobot-v1";
  }
  return "unknown";
}

std::vector<EnvId> all_envs() { return {EnvId::kCartPole, EnvId::kMountainCar, EnvId::kAcrobot}; }

EnvState Environment::reset(Rng& rng) {
  randomize(rng);
  steps_ = 0;
  started_ = true;
  state_ = {observe(), false, false};
  return state_;
}

void Environment::set_internal_state(std::span<const double> state) {
  if (state.size() != internal_state().size()) {
    throw ConfigError("internal state has wrong dimension for " + env_name(id()));
  }
  assign(state);
  steps_ = 0;
  started_ = true;
  state_ = {observe(), false, false};
}

StepResult Environment::step(int action) {
  if (!started_) throw UsageError(env_name(id()) + ": step before reset");
  if (state_.done()) throw UsageError(env_name(id()) + ": step after episode end");
  if (action < 0 || static_cast<std::size_t>(action) >= action_count()) {
    throw UsageError(env_name(id()) + ": invalid action " + std::to_string(action));
  }
  const Outcome outcome = advance(action);
  ++steps_;
  state_.observation = observe();
  state_.terminated = outcome.terminated;
  state_.truncated = !outcome.terminated && steps_ >= max_steps();
  return {state_, outcome.reward};
}

std::unique_ptr<Environment> make_environment(EnvId id) {
  switch (id) {
    case EnvId::kCartPole: return std::make_unique<CartPole>();
    case EnvId::kMountainCar: return std::make_unique<MountainCar>();
    case EnvId::kAcrobot: return std::make_unique<Acrobot>();
  }
  throw ConfigError("unknown environment id");
}

// CartPole ------------------------------------------------------------------

std::vector<double> CartPole::internal_state() const { return {x_, x_dot_, theta_, theta_dot_}; }
std::vector<double> CartPole::observe() const { return internal_state(); }

void CartPole::randomize(Rng& rng) {
  x_ = rng.uniform(-0.05, 0.05);
  x_dot_ = rng.uniform(-0.05, 0.05);
  theta_ = rng.uniform(-0.05, 0.05);
  theta_dot_ = rng.uniform(-0.05, 0.05);
}

void CartPole::assign(std::span<const double> s) {
  x_ = s[0];
  x_dot_ = s[1];
  theta_ = s[2];
  theta_dot_ = s[3];
}

Environment::Outcome CartPole::advance(int action) {
  constexpr double total_mass = kCartMass + kPoleMass;
  constexpr double polemass_length = kPoleMass * kHalfLength;
  const double force = action == 1 ? kForce : -kForce;
  const double cos_theta = std::cos(theta_);
  const double sin_theta = std::sin(theta_);

  const double temp = (force + polemass_length * theta_dot_ * theta_dot_ * sin_theta) / total_mass;
  const double theta_acc =
      (kGravity * sin_theta - cos_theta * temp) /
      (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_theta * cos_theta / total_mass));
  const double x_acc = temp - polemass_length * theta_acc * cos_theta / total_mass;

  // Explicit Euler.
  x_ += kTau * x_dot_;
  x_dot_ += kTau * x_acc;
  theta_ += kTau * theta_dot_;
  theta_dot_ += kTau * theta_acc;

  const bool terminated = x_ < -kXThreshold || x_ > kXThreshold || theta_ < -kThetaThreshold ||
                          theta_ > kThetaThreshold;
  return {1.0, terminated};
}

// MountainCar ---------------------------------------------------------------

std::vector<double> MountainCar::internal_state() const { return {position_, velocity_}; }
std::vector<double> MountainCar::observe() const { return internal_state(); }

void MountainCar::randomize(Rng& rng) {
  position_ = rng.uniform(-0.6, -0.4);
  velocity_ = 0.0;
}

void MountainCar::assign(std::span<const double> s) {
  position_ = s[0];
  velocity_ = s[1];
}

Environment::Outcome MountainCar::advance(int action) {
  velocity_ += (action - 1) * kForce + std::cos(3.0 * position_) * (-kGravity);
  velocity_ = std::clamp(velocity_, -kMaxSpeed, kMaxSpeed);
  position_ += velocity_;
  position_ = std::clamp(position_, kMinPosition, kMaxPosition);
  if (position_ == kMinPosition && velocity_ < 0.0) velocity_ = 0.0;
  return {-1.0, position_ >= kGoalPosition};
}

// Acrobot -------------------------------------------------------------------

namespace {

using AcrobotState = std::array<double, 4>;

AcrobotState acrobot_derivative(const AcrobotState& s, double torque) {
  constexpr double m1 = Acrobot::kLinkMass1, m2 = Acrobot::kLinkMass2;
  constexpr double l1 = Acrobot::kLinkLength1;
  constexpr double lc1 = Acrobot::kLinkCom1, lc2 = Acrobot::kLinkCom2;
  constexpr double i1 = Acrobot::kLinkMoi, i2 = Acrobot::kLinkMoi;
  constexpr double g = Acrobot::kGravity;
  constexpr double half_pi = std::numbers::pi / 2.0;
  const auto [theta1, theta2, dtheta1, dtheta2] = s;

  const double d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * std::cos(theta2)) +
                    i1 + i2;
  const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + i2;
  const double phi2 = m2 * lc2 * g * std::cos(theta1 + theta2 - half_pi);
  const double phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * std::sin(theta2) -
                      2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                      (m1 * lc1 + m2 * l1) * g * std::cos(theta1 - half_pi) + phi2;
  const double ddtheta2 =
      (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * std::sin(theta2) - phi2) /
      (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
  const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
  return {dtheta1, dtheta2, ddtheta1, ddtheta2};
}

AcrobotState axpy(const AcrobotState& s, double h, const AcrobotState& k) {
  return {s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2], s[3] + h * k[3]};
}

double wrap_angle(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  while (x > std::numbers::pi) x -= two_pi;
  while (x < -std::numbers::pi) x += two_pi;
  return x;
}

}  // namespace

std::vector<double> Acrobot::internal_state() const { return {s_.begin(), s_.end()}; }

std::vector<double> Acrobot::observe() const {
  return {std::cos(s_[0]), std::sin(s_[0]), std::cos(s_[1]), std::sin(s_[1]), s_[2], s_[3]};
}

void Acrobot::randomize(Rng& rng) {
  for (double& v : s_) v = rng.uniform(-0.1, 0.1);
}

void Acrobot::assign(std::span<const double> s) { std::copy(s.begin(), s.end(), s_.begin()); }

Environment::Outcome Acrobot::advance(int action) {
  const double torque = static_cast<double>(action - 1);
  const AcrobotState k1 = acrobot_derivative(s_, torque);
  const AcrobotState k2 = acrobot_derivative(axpy(s_, kDt / 2.0, k1), torque);
  const AcrobotState k3 = acrobot_derivative(axpy(s_, kDt / 2.0, k2), torque);
  const AcrobotState k4 = acrobot_derivative(axpy(s_, kDt, k3), torque);
  for (std::size_t i = 0; i < 4; ++i) {
    s_[i] += kDt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  s_[0] = wrap_angle(s_[0]);
  s_[1] = wrap_angle(s_[1]);
  s_[2] = std::clamp(s_[2], -kMaxVel1, kMaxVel1);
  s_[3] = std::clamp(s_[3], -kMaxVel2, kMaxVel2);

  const bool terminated = -std::cos(s_[0]) - std::cos(s_[1] + s_[0]) > 1.0;
  return {-1.0, terminated};
}

double acrobot_tip_height(std::span<const double> obs) {
  if (obs.size() != 6) throw ConfigError("acrobot observation must have 6 components");
  // cos(t1 + t2) = cos t1 cos t2 - sin t1 sin t2
  return -obs[0] - (obs[0] * obs[2] - obs[1] * obs[3]);
}

// Normalization -------------------------------------------------------------

NormalizationSpec::NormalizationSpec(std::vector<Bounds> bounds, bool clip)
    : bounds_(std::move(bounds)), clip_(clip) {
  if (bounds_.empty()) throw ConfigError("normalization needs at least one dimension");
  for (const auto& b : bounds_) {
    if (!(b.low < b.high)) throw ConfigError("normalization bounds require low < high");
  }
}

std::vector<double> NormalizationSpec::normalize(std::span<const double> observation) const {
  std::vector<double> out(bounds_.size());
  normalize_into(observation, out);
  return out;
}

void NormalizationSpec::normalize_into(std::span<const double> observation,
                                       std::span<double> out) const {
  if (observation.size() != bounds_.size() || out.size() != bounds_.size()) {
    throw ConfigError("normalize: dimension mismatch");
  }
  for (std::size_t i = 0; i < bounds_.size(); ++i) out[i] = normalize_component(i, observation[i]);
}

double NormalizationSpec::normalize_component(std::size_t index, double x) const {
  if (!std::isfinite(x)) throw DataError("normalize: non-finite observation component");
  const auto [low, high] = bounds_.at(index);
  const double y = 2.0 * (x - low) / (high - low) - 1.0;
  return clip_ ? std::clamp(y, -1.0, 1.0) : y;
}

std::vector<double> NormalizationSpec::denormalize(std::span<const double> normalized) const {
  if (normalized.size() != bounds_.size()) throw ConfigError("denormalize: dimension mismatch");
  std::vector<double> out(bounds_.size());
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    const auto [low, high] = bounds_[i];
    out[i] = low + (normalized[i] + 1.0) * (high - low) / 2.0;
  }
  return out;
}

NormalizationSpec default_normalization(EnvId id) {
  constexpr double pi = std::numbers::pi;
  switch (id) {
    case EnvId::kCartPole:
      // Velocities are unbounded; these cover typical on-policy ranges.
      return NormalizationSpec({{-2.4, 2.4}, {-3.0, 3.0}, {-0.2095, 0.2095}, {-3.5, 3.5}}, true);
    case EnvId::kMountainCar:
      return NormalizationSpec({{-1.2, 0.6}, {-0.07, 0.07}}, true);
    case EnvId::kAcrobot:
      return NormalizationSpec(
          {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}, {-4 * pi, 4 * pi}, {-9 * pi, 9 * pi}}, true);
  }
  throw ConfigError("unknown environment id");
}

// Shaping -------------------------------------------------------------------

double shaping_potential(const ShapingSpec& spec, std::span<const double> observation) {
  return spec.coefficient * acrobot_tip_height(observation);
}

ShapedStep shaped_step(Environment& env, int action, const ShapingSpec& spec) {
  if (env.id() != EnvId::kAcrobot) {
    throw ConfigError("reward shaping is only defined for acrobot-v1, not " + env_name(env.id()));
  }
  if (spec.coefficient < 0.0) throw ConfigError("shaping coefficient must be >= 0");
  const double before = shaping_potential(spec, env.state().observation);
  ShapedStep result{env.step(action), 0.0};
  if (spec.coefficient == 0.0) {
    result.shaped_reward = result.raw.reward;
    return result;
  }
  const double after =
      result.raw.state.terminated ? 0.0 : shaping_potential(spec, result.raw.state.observation);
  result.shaped_reward = result.raw.reward + spec.discount * after - before;
  return result;
}

}  // namespace chdqn
