#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chdqn/random.hpp"

namespace chdqn {

enum class EnvId { kCartPole, kMountainCar, kAcrobot };

/// "cartpole-v1", "mountaincar-v0", "acrobot-v1". Throws ConfigError otherwise.
EnvId parse_env_id(std::string_view name);
std::string env_name(EnvId id);
std::vector<EnvId> all_envs();

struct EnvState {
  std::vector<double> observation;
  bool terminated = false;  // MDP terminal state (failure or goal)
  bool truncated = false;   // time limit reached

  bool done() const { return terminated || truncated; }
};

struct StepResult {
  EnvState state;
  double reward = 0.0;
};

/// Common stepping interface. The base class owns the step counter, the
/// time limit and the usage checks; subclasses supply the physics.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual EnvId id() const = 0;
  virtual std::size_t observation_dim() const = 0;
  virtual std::size_t action_count() const = 0;
  virtual std::size_t max_steps() const = 0;

  EnvState reset(Rng& rng);

  /// Throws UsageError for an invalid action or when the episode has ended.
  StepResult step(int action);

  /// Overwrites the internal physical state and starts a fresh episode.
  /// The layout is environment-specific; see internal_state().
  void set_internal_state(std::span<const double> state);
  virtual std::vector<double> internal_state() const = 0;

  const EnvState& state() const { return state_; }
  std::size_t steps() const { return steps_; }

 protected:
  struct Outcome {
    double reward;
    bool terminated;
  };

  virtual void randomize(Rng& rng) = 0;
  virtual void assign(std::span<const double> state) = 0;
  virtual Outcome advance(int action) = 0;
  virtual std::vector<double> observe() const = 0;

 private:
  EnvState state_;
  std::size_t steps_ = 0;
  bool started_ = false;
};

std::unique_ptr<Environment> make_environment(EnvId id);

/// Internal state (x, x_dot, theta, theta_dot); observation is the same vector.
class CartPole final : public Environment {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kForce = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kXThreshold = 2.4;
  static constexpr double kThetaThreshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;

  EnvId id() const override { return EnvId::kCartPole; }
  std::size_t observation_dim() const override { return 4; }
  std::size_t action_count() const override { return 2; }
  std::size_t max_steps() const override { return 500; }
  std::vector<double> internal_state() const override;

 protected:
  void randomize(Rng& rng) override;
  void assign(std::span<const double> state) override;
  Outcome advance(int action) override;
  std::vector<double> observe() const override;

 private:
  double x_ = 0.0, x_dot_ = 0.0, theta_ = 0.0, theta_dot_ = 0.0;
};

/// Internal state (position, velocity); observation is the same vector.
class MountainCar final : public Environment {
 public:
  static constexpr double kMinPosition = -1.2;
  static constexpr double kMaxPosition = 0.6;
  static constexpr double kMaxSpeed = 0.07;
  static constexpr double kGoalPosition = 0.5;
  static constexpr double kForce = 0.001;
  static constexpr double kGravity = 0.0025;

  EnvId id() const override { return EnvId::kMountainCar; }
  std::size_t observation_dim() const override { return 2; }
  std::size_t action_count() const override { return 3; }
  std::size_t max_steps() const override { return 200; }
  std::vector<double> internal_state() const override;

 protected:
  void randomize(Rng& rng) override;
  void assign(std::span<const double> state) override;
  Outcome advance(int action) override;
  std::vector<double> observe() const override;

 private:
  double position_ = 0.0, velocity_ = 0.0;
};

/// Two-link underactuated pendulum, "book" dynamics integrated with one RK4
/// step of dt = 0.2. Internal state (theta1, theta2, theta1_dot, theta2_dot);
/// observation (cos theta1, sin theta1, cos theta2, sin theta2, theta1_dot, theta2_dot).
class Acrobot final : public Environment {
 public:
  static constexpr double kDt = 0.2;
  static constexpr double kLinkLength1 = 1.0;
  static constexpr double kLinkMass1 = 1.0;
  static constexpr double kLinkMass2 = 1.0;
  static constexpr double kLinkCom1 = 0.5;
  static constexpr double kLinkCom2 = 0.5;
  static constexpr double kLinkMoi = 1.0;
  static constexpr double kGravity = 9.8;
  static constexpr double kMaxVel1 = 4.0 * 3.14159265358979323846;
  static constexpr double kMaxVel2 = 9.0 * 3.14159265358979323846;

  EnvId id() const override { return EnvId::kAcrobot; }
  std::size_t observation_dim() const override { return 6; }
  std::size_t action_count() const override { return 3; }
  std::size_t max_steps() const override { return 500; }
  std::vector<double> internal_state() const override;

 protected:
  void randomize(Rng& rng) override;
  void assign(std::span<const double> state) override;
  Outcome advance(int action) override;
  std::vector<double> observe() const override;

 private:
  std::array<double, 4> s_{};
};

/// -cos(theta1) - cos(theta1 + theta2) computed from an Acrobot observation.
double acrobot_tip_height(std::span<const double> observation);

struct Bounds {
  double low;
  double high;
};

/// Per-dimension affine map of [low, high] onto [-1, 1].
class NormalizationSpec {
 public:
  NormalizationSpec(std::vector<Bounds> bounds, bool clip);

  std::size_t dim() const { return bounds_.size(); }
  bool clip() const { return clip_; }
  std::span<const Bounds> bounds() const { return bounds_; }

  std::vector<double> normalize(std::span<const double> observation) const;
  void normalize_into(std::span<const double> observation, std::span<double> out) const;
  double normalize_component(std::size_t index, double value) const;
  std::vector<double> denormalize(std::span<const double> normalized) const;

 private:
  std::vector<Bounds> bounds_;
  bool clip_;
};

NormalizationSpec default_normalization(EnvId id);

/// Potential Phi(s) = coefficient * tip_height(s), applied as
/// r + discount * Phi(s') - Phi(s), with Phi := 0 at terminal s'.
struct ShapingSpec {
  double coefficient = 0.1;
  double discount = 0.99;
};

double shaping_potential(const ShapingSpec& spec, std::span<const double> observation);

struct ShapedStep {
  StepResult raw;
  double shaped_reward = 0.0;
};

/// Steps an Acrobot and returns both the raw and the shaped reward.
/// Throws ConfigError for any other environment.
ShapedStep shaped_step(Environment& env, int action, const ShapingSpec& spec);

}  // namespace chdqn
