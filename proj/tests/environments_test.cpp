#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "chdqn/environments.hpp"
#include "chdqn/errors.hpp"
#include "chdqn/random.hpp"

using namespace chdqn;

namespace {

void expect_vec_near(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

}  // namespace

TEST(EnvIds, ParseAndName) {
  for (EnvId id : all_envs()) EXPECT_EQ(parse_env_id(env_name(id)), id);
  EXPECT_EQ(parse_env_id("cartpole-v1"), EnvId::kCartPole);
  EXPECT_THROW(parse_env_id("pong"), ConfigError);
}

TEST(EnvIds, Dimensions) {
  EXPECT_EQ(make_environment(EnvId::kCartPole)->observation_dim(), 4u);
  EXPECT_EQ(make_environment(EnvId::kMountainCar)->observation_dim(), 2u);
  EXPECT_EQ(make_environment(EnvId::kAcrobot)->observation_dim(), 6u);
  EXPECT_EQ(make_environment(EnvId::kCartPole)->action_count(), 2u);
  EXPECT_EQ(make_environment(EnvId::kMountainCar)->action_count(), 3u);
  EXPECT_EQ(make_environment(EnvId::kAcrobot)->action_count(), 3u);
}

TEST(Reset, InitialStateRanges) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    CartPole cp;
    for (double v : cp.reset(rng).observation) EXPECT_LE(std::abs(v), 0.05);
    MountainCar mc;
    const auto m = mc.reset(rng).observation;
    EXPECT_GE(m[0], -0.6);
    EXPECT_LE(m[0], -0.4);
    EXPECT_EQ(m[1], 0.0);
    Acrobot ac;
    ac.reset(rng);
    for (double v : ac.internal_state()) EXPECT_LE(std::abs(v), 0.1);
  }
}

TEST(Reset, SameSeedSameState) {
  for (EnvId id : all_envs()) {
    Rng a(42), b(42);
    auto e1 = make_environment(id), e2 = make_environment(id);
    EXPECT_EQ(e1->reset(a).observation, e2->reset(b).observation);
  }
}

TEST(CartPoleStep, FromRestPushRight) {
  CartPole env;
  env.set_internal_state(std::vector<double>{0, 0, 0, 0});
  const auto r = env.step(1);
  expect_vec_near(r.state.observation, {0.0, 0.19512195121951219512, 0.0, -0.29268292682926829268},
                  1e-12);
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_FALSE(r.state.terminated);
}

TEST(CartPoleStep, GeneralStatePushLeft) {
  CartPole env;
  env.set_internal_state(std::vector<double>{0.01, -0.02, 0.03, 0.04});
  const auto r = env.step(0);
  expect_vec_near(r.state.observation,
                  {0.0096, -0.21553901710278938789, 0.0308, 0.34199522377603919399}, 1e-12);
}

TEST(CartPoleStep, TerminatesOutsideLimits) {
  CartPole env;
  env.set_internal_state(std::vector<double>{2.39, 1.0, 0.0, 0.0});
  const auto r = env.step(1);
  EXPECT_TRUE(r.state.terminated);
  EXPECT_FALSE(r.state.truncated);
  EXPECT_EQ(r.reward, 1.0);
}

TEST(MountainCarStep, Coast) {
  MountainCar env;
  env.set_internal_state(std::vector<double>{-0.5, 0.0});
  const auto r = env.step(1);
  expect_vec_near(r.state.observation, {-0.50017684300416925728, -0.00017684300416925727522},
                  1e-15);
  EXPECT_EQ(r.reward, -1.0);
}

TEST(MountainCarStep, PushRight) {
  MountainCar env;
  env.set_internal_state(std::vector<double>{-0.5, 0.0});
  const auto r = env.step(2);
  expect_vec_near(r.state.observation, {-0.49917684300416925728, 0.00082315699583074272478},
                  1e-15);
}

TEST(MountainCarStep, LeftWallZeroesVelocity) {
  MountainCar env;
  env.set_internal_state(std::vector<double>{-1.19, -0.05});
  const auto r = env.step(0);
  EXPECT_EQ(r.state.observation[0], MountainCar::kMinPosition);
  EXPECT_EQ(r.state.observation[1], 0.0);
}

TEST(MountainCarStep, GoalTerminates) {
  MountainCar env;
  env.set_internal_state(std::vector<double>{0.49, 0.05});
  const auto r = env.step(2);
  EXPECT_TRUE(r.state.terminated);
  EXPECT_EQ(r.reward, -1.0);
}

TEST(MountainCarStep, VelocityClamped) {
  MountainCar env;
  env.set_internal_state(std::vector<double>{-0.5, 0.0699});
  const auto r = env.step(2);
  EXPECT_LE(r.state.observation[1], MountainCar::kMaxSpeed);
}

TEST(AcrobotStep, SingleRk4StepFixture) {
  Acrobot env;
  env.set_internal_state(std::vector<double>{0.05, -0.03, 0.02, 0.01});
  const auto r = env.step(2);
  expect_vec_near(env.internal_state(),
                  {0.033964268077167072537, 0.014028356136744093847, -0.17546465025153687622,
                   0.41971560226526895951},
                  1e-12);
  expect_vec_near(r.state.observation,
                  {0.99942326969182661972, 0.033957738418487100414, 0.99990160422571407766,
                   0.014027896023404484512, -0.17546465025153687622, 0.41971560226526895951},
                  1e-12);
  EXPECT_EQ(r.reward, -1.0);
  EXPECT_FALSE(r.state.terminated);
}

TEST(AcrobotStep, AnglesWrappedAndVelocitiesBounded) {
  Rng rng(8);
  Acrobot env;
  env.reset(rng);
  while (!env.state().done()) {
    env.step(static_cast<int>(rng.index(3)));
    const auto s = env.internal_state();
    EXPECT_LE(std::abs(s[0]), std::numbers::pi);
    EXPECT_LE(std::abs(s[1]), std::numbers::pi);
    EXPECT_LE(std::abs(s[2]), Acrobot::kMaxVel1);
    EXPECT_LE(std::abs(s[3]), Acrobot::kMaxVel2);
  }
}

TEST(AcrobotStep, TerminatesWhenTipAboveLine) {
  Acrobot env;
  // Hanging straight up: tip height 2 > 1.
  env.set_internal_state(std::vector<double>{std::numbers::pi - 0.01, 0.0, 0.0, 0.0});
  EXPECT_TRUE(env.step(1).state.terminated);
}

TEST(TipHeight, WithinRange) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double t1 = rng.uniform(-4, 4), t2 = rng.uniform(-4, 4);
    const std::vector<double> obs{std::cos(t1), std::sin(t1), std::cos(t2), std::sin(t2), 0, 0};
    const double h = acrobot_tip_height(obs);
    EXPECT_GE(h, -2.0 - 1e-12);
    EXPECT_LE(h, 2.0 + 1e-12);
    EXPECT_NEAR(h, -std::cos(t1) - std::cos(t1 + t2), 1e-12);
  }
}

TEST(EnvironmentUsage, Errors) {
  CartPole env;
  EXPECT_THROW(env.step(0), UsageError);
  Rng rng(1);
  env.reset(rng);
  EXPECT_THROW(env.step(2), UsageError);
  EXPECT_THROW(env.step(-1), UsageError);
  env.set_internal_state(std::vector<double>{3.0, 0, 0, 0});
  env.step(0);
  EXPECT_TRUE(env.state().terminated);
  EXPECT_THROW(env.step(0), UsageError);
  EXPECT_THROW(env.set_internal_state(std::vector<double>{0, 0}), ConfigError);
}

TEST(EpisodeCaps, TruncationFlagged) {
  // CartPole with a balancing controller, and MountainCar / Acrobot doing nothing.
  struct Case {
    EnvId id;
    std::size_t cap;
    int action;
  };
  for (const Case& c : {Case{EnvId::kMountainCar, 200, 1}, Case{EnvId::kAcrobot, 500, 1}}) {
    Rng rng(0);
    auto env = make_environment(c.id);
    env->reset(rng);
    double ret = 0.0;
    StepResult r;
    while (!env->state().done()) {
      r = env->step(c.action);
      ret += r.reward;
    }
    EXPECT_EQ(env->steps(), c.cap);
    EXPECT_TRUE(r.state.truncated);
    EXPECT_FALSE(r.state.terminated);
    EXPECT_EQ(ret, -static_cast<double>(c.cap));
  }
  Rng rng(0);
  CartPole cp;
  cp.reset(rng);
  double ret = 0.0;
  while (!cp.state().done()) {
    const auto& o = cp.state().observation;
    ret += cp.step(o[2] + 0.5 * o[3] + 0.01 * o[0] + 0.1 * o[1] > 0 ? 1 : 0).reward;
  }
  EXPECT_EQ(cp.steps(), 500u);
  EXPECT_TRUE(cp.state().truncated);
  EXPECT_EQ(ret, 500.0);
}

TEST(EpisodeCaps, ReturnMatchesLengthForRandomPolicies) {
  Rng rng(21);
  for (EnvId id : all_envs()) {
    for (int ep = 0; ep < 5; ++ep) {
      auto env = make_environment(id);
      env->reset(rng);
      double ret = 0.0;
      while (!env->state().done()) {
        ret += env->step(static_cast<int>(rng.index(env->action_count()))).reward;
      }
      EXPECT_LE(env->steps(), env->max_steps());
      const double len = static_cast<double>(env->steps());
      EXPECT_EQ(std::abs(ret), len);
    }
  }
}

TEST(Determinism, SameSeedAndActionsSameTrajectory) {
  for (EnvId id : all_envs()) {
    Rng r1(77), r2(77);
    auto a = make_environment(id), b = make_environment(id);
    a->reset(r1);
    b->reset(r2);
    while (!a->state().done()) {
      const int act = static_cast<int>(r1.index(a->action_count()));
      r2.index(b->action_count());
      const auto sa = a->step(act), sb = b->step(act);
      ASSERT_EQ(sa.state.observation, sb.state.observation);
      ASSERT_EQ(sa.reward, sb.reward);
    }
    EXPECT_TRUE(b->state().done());
  }
}

TEST(Normalization, Examples) {
  const auto mc = default_normalization(EnvId::kMountainCar);
  expect_vec_near(mc.normalize(std::vector<double>{-1.2, 0.07}), {-1.0, 1.0}, 1e-15);
  expect_vec_near(mc.normalize(std::vector<double>{-0.3, 0.0}), {0.0, 0.0}, 1e-15);
  const auto cp = default_normalization(EnvId::kCartPole);
  expect_vec_near(cp.normalize(std::vector<double>{1.2, -1.5, 0.0, 7.0}), {0.5, -0.5, 0.0, 1.0},
                  1e-15);
}

TEST(Normalization, ClipsOutOfRange) {
  for (EnvId id : all_envs()) {
    const auto spec = default_normalization(id);
    EXPECT_TRUE(spec.clip());
    std::vector<double> big(spec.dim(), 1e6), small(spec.dim(), -1e6);
    for (double v : spec.normalize(big)) EXPECT_EQ(v, 1.0);
    for (double v : spec.normalize(small)) EXPECT_EQ(v, -1.0);
  }
}

TEST(Normalization, InvertibleInsideBounds) {
  Rng rng(6);
  for (EnvId id : all_envs()) {
    const auto spec = default_normalization(id);
    for (int i = 0; i < 500; ++i) {
      std::vector<double> x(spec.dim());
      for (std::size_t d = 0; d < x.size(); ++d) {
        x[d] = rng.uniform(spec.bounds()[d].low, spec.bounds()[d].high);
      }
      const auto back = spec.denormalize(spec.normalize(x));
      for (std::size_t d = 0; d < x.size(); ++d) {
        const double scale = spec.bounds()[d].high - spec.bounds()[d].low;
        EXPECT_NEAR(back[d], x[d], 1e-12 * std::max(1.0, scale));
      }
    }
  }
}

TEST(Normalization, Errors) {
  EXPECT_THROW(NormalizationSpec({}, true), ConfigError);
  EXPECT_THROW(NormalizationSpec({{1.0, 1.0}}, true), ConfigError);
  const NormalizationSpec spec({{0.0, 1.0}}, false);
  EXPECT_THROW(spec.normalize(std::vector<double>{0.1, 0.2}), ConfigError);
  EXPECT_THROW(spec.normalize(std::vector<double>{std::nan("")}), DataError);
  EXPECT_EQ(spec.normalize(std::vector<double>{2.0})[0], 3.0);  // no clip
}

TEST(Shaping, ZeroCoefficientIsExactlyRaw) {
  Rng rng(10);
  Acrobot env;
  env.reset(rng);
  const ShapingSpec spec{.coefficient = 0.0};
  while (!env.state().done()) {
    const auto s = shaped_step(env, static_cast<int>(rng.index(3)), spec);
    EXPECT_EQ(s.shaped_reward, s.raw.reward);
  }
}

TEST(Shaping, MatchesPotentialDifference) {
  Rng rng(12);
  Acrobot env;
  env.reset(rng);
  const ShapingSpec spec{.coefficient = 0.1, .discount = 0.99};
  while (!env.state().done()) {
    const auto before = env.state().observation;
    const double h0 = -before[0] - std::cos(std::atan2(before[1], before[0]) +
                                            std::atan2(before[3], before[2]));
    const auto s = shaped_step(env, static_cast<int>(rng.index(3)), spec);
    const auto& after = s.raw.state.observation;
    const double h1 = -after[0] - std::cos(std::atan2(after[1], after[0]) +
                                           std::atan2(after[3], after[2]));
    const double phi1 = s.raw.state.terminated ? 0.0 : 0.1 * h1;
    EXPECT_NEAR(s.shaped_reward, -1.0 + 0.99 * phi1 - 0.1 * h0, 1e-9);
  }
}

TEST(Shaping, RaisingTheTipEarnsBonus) {
  Acrobot env;
  env.set_internal_state(std::vector<double>{0.0, 0.0, 3.0, 0.0});  // swinging up
  const ShapingSpec spec{.coefficient = 0.1, .discount = 1.0};
  const double h0 = acrobot_tip_height(env.state().observation);
  const auto s = shaped_step(env, 1, spec);
  const double h1 = acrobot_tip_height(s.raw.state.observation);
  ASSERT_GT(h1, h0);
  EXPECT_GT(s.shaped_reward, s.raw.reward);
}

TEST(Shaping, TerminalPotentialIsZero) {
  Acrobot env;
  env.set_internal_state(std::vector<double>{std::numbers::pi - 0.01, 0.0, 0.0, 0.0});
  const ShapingSpec spec{.coefficient = 0.5, .discount = 0.99};
  const double phi0 = shaping_potential(spec, env.state().observation);
  const auto s = shaped_step(env, 1, spec);
  ASSERT_TRUE(s.raw.state.terminated);
  EXPECT_NEAR(s.shaped_reward, -1.0 - phi0, 1e-15);
}

TEST(Shaping, OnlyForAcrobot) {
  Rng rng(0);
  CartPole cp;
  cp.reset(rng);
  EXPECT_THROW(shaped_step(cp, 0, ShapingSpec{}), ConfigError);
  MountainCar mc;
  mc.reset(rng);
  EXPECT_THROW(shaped_step(mc, 0, ShapingSpec{}), ConfigError);
}
