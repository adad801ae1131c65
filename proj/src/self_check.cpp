#include "chdqn/self_check.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "chdqn/chebyshev.hpp"
#include "chdqn/environments.hpp"
#include "chdqn/experiment.hpp"
#include "chdqn/neural_net.hpp"
#include "chdqn/replay_buffer.hpp"

namespace chdqn {
namespace {

std::string describe(const char* label, double value) {
  std::ostringstream s;
  s << label << ' ' << value;
  return s.str();
}

CheckResult check_recurrence() {
  double worst = 0.0;
  for (int n = 0; n <= 12; ++n) {
    for (int i = 0; i <= 1000; ++i) {
      const double x = -1.0 + 2.0 * i / 1000.0;
      worst = std::max(worst, std::abs(chebyshev_t(n, x) - std::cos(n * std::acos(x))));
    }
  }
  return {"chebyshev_recurrence", worst < 1e-12, describe("max abs error", worst)};
}

CheckResult check_orthogonality() {
  double worst = 0.0;
  for (int n = 0; n <= 8; ++n) {
    for (int m = 0; m <= 8; ++m) {
      const double expected = n != m ? 0.0 : (n == 0 ? std::numbers::pi : std::numbers::pi / 2.0);
      worst = std::max(worst, std::abs(gauss_chebyshev_inner_product(n, m, 17) - expected));
    }
  }
  return {"gauss_chebyshev_orthogonality", worst < 1e-10, describe("max abs error", worst)};
}

CheckResult check_parameter_table() {
  const std::array<std::size_t, 4> expected{4'610, 5'634, 6'146, 6'658};
  const auto models = standard_models();
  bool ok = true;
  std::ostringstream detail;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto count = count_parameters(EnvId::kCartPole, models[i]);
    ok = ok && count == expected[i];
    detail << models[i].label() << '=' << count << ' ';
  }
  return {"parameter_table_cartpole", ok, detail.str()};
}

CheckResult check_gradients(bool perturb) {
  Rng rng(20240611);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    NetworkSpec spec;
    spec.input_dim = 1 + rng.index(6);
    const std::size_t depth = rng.index(3);
    for (std::size_t d = 0; d < depth; ++d) spec.hidden.push_back(1 + rng.index(8));
    spec.output_dim = 1 + rng.index(4);
    Network net(spec);
    net.init_glorot(rng);
    for (double& p : net.mutable_parameters()) p += rng.uniform(-0.1, 0.1);

    std::vector<double> input(spec.input_dim);
    for (double& x : input) x = rng.uniform(-1.0, 1.0);
    const std::size_t action = rng.index(spec.output_dim);
    const double target = rng.uniform(-2.0, 2.0);

    std::vector<double> analytic(net.parameter_count(), 0.0);
    net.forward_cached(input);
    net.accumulate_gradient(action, target, analytic);
    if (perturb) {
      for (double& g : analytic) g *= 1.0 + 1e-3;
    }

    constexpr double h = 1e-5;
    std::vector<double> numeric(net.parameter_count());
    auto loss = [&] {
      const double q = net.forward(input)[action];
      return (target - q) * (target - q);
    };
    auto params = net.mutable_parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + h;
      const double up = loss();
      params[i] = saved - h;
      const double down = loss();
      params[i] = saved;
      numeric[i] = (up - down) / (2.0 * h);
    }
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      na += analytic[i] * analytic[i];
      nn += numeric[i] * numeric[i];
    }
    const double scale = std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
    worst = std::max(worst, std::sqrt(diff) / scale);
  }
  return {"finite_difference_gradient", worst < 1e-5, describe("max relative error", worst)};
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

CheckResult check_cartpole_fixture() {
  CartPole env;
  const std::array<double, 4> zero{0, 0, 0, 0};
  env.set_internal_state(zero);
  const auto obs = env.step(1).state.observation;
  const double err =
      max_abs_diff(obs, {0.0, 0.19512195121951219512, 0.0, -0.29268292682926829268});
  return {"cartpole_step_fixture", err < 1e-9, describe("max abs error", err)};
}

CheckResult check_mountaincar_fixture() {
  MountainCar env;
  const std::array<double, 2> start{-0.5, 0.0};
  env.set_internal_state(start);
  const auto obs = env.step(1).state.observation;
  const double v = -std::cos(-1.5) * 0.0025;
  const double err = max_abs_diff(obs, {-0.5 + v, v});
  return {"mountaincar_step_fixture", err < 1e-9, describe("max abs error", err)};
}

CheckResult check_acrobot_fixture() {
  Acrobot env;
  const std::array<double, 4> zero{0, 0, 0, 0};
  env.set_internal_state(zero);
  env.step(1);
  double err = max_abs_diff(env.internal_state(), {0, 0, 0, 0});
  const std::array<double, 4> start{0.05, -0.03, 0.02, 0.01};
  env.set_internal_state(start);
  env.step(2);
  err = std::max(err, max_abs_diff(env.internal_state(),
                                   {0.033964268077167072537, 0.014028356136744093847,
                                    -0.17546465025153687622, 0.41971560226526895951}));
  return {"acrobot_step_fixture", err < 1e-9, describe("max abs error", err)};
}

CheckResult check_episode_caps() {
  std::ostringstream detail;
  bool ok = true;
  for (EnvId id : all_envs()) {
    auto env = make_environment(id);
    Rng rng(7);
    env->reset(rng);
    // MountainCar and Acrobot never terminate from rest under a zero action;
    // CartPole is balanced by a bang-bang controller on the pole angle.
    while (!env->state().done()) {
      int action = 1;
      if (id == EnvId::kCartPole) {
        const auto& o = env->state().observation;
        action = o[2] + 0.5 * o[3] > 0.0 ? 1 : 0;
      }
      env->step(action);
    }
    ok = ok && env->state().truncated && !env->state().terminated && env->steps() == env->max_steps();
    detail << env_name(id) << '=' << env->steps() << ' ';
  }
  return {"episode_caps", ok, detail.str()};
}

CheckResult check_replay_fifo() {
  ReplayBuffer buffer(5);
  for (int i = 0; i < 12; ++i) buffer.push({{double(i)}, 0, double(i), {double(i)}, false});
  bool ok = buffer.size() == 5;
  for (std::size_t i = 0; i < buffer.size(); ++i) ok = ok && buffer.at(i).reward == 7.0 + i;
  return {"replay_fifo", ok, "size " + std::to_string(buffer.size())};
}

CheckResult check_replay_uniformity() {
  ReplayBuffer buffer(4);
  for (int i = 0; i < 4; ++i) buffer.push({{0.0}, 0, double(i), {0.0}, false});
  Rng rng(12345);
  std::array<double, 4> counts{};
  constexpr int kDraws = 10'000;
  for (int i = 0; i < kDraws; ++i) counts[static_cast<std::size_t>((*buffer.sample(1, rng))[0]->reward)] += 1;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - kDraws / 4.0) * (c - kDraws / 4.0) / (kDraws / 4.0);
  // 99th percentile of chi-square with 3 degrees of freedom.
  return {"replay_uniformity", chi2 < 11.3449, describe("chi2", chi2)};
}

}  // namespace

std::vector<CheckResult> run_self_checks(const SelfCheckOptions& options) {
  std::vector<std::function<CheckResult()>> checks = {
      check_recurrence,
      check_orthogonality,
      check_parameter_table,
      [&] { return check_gradients(options.perturb_gradient); },
      check_cartpole_fixture,
      check_mountaincar_fixture,
      check_acrobot_fixture,
      check_episode_caps,
      check_replay_fifo,
      check_replay_uniformity,
  };
  std::vector<CheckResult> results;
  for (auto& check : checks) {
    try {
      results.push_back(check());
    } catch (const std::exception& e) {
      results.push_back({"exception", false, e.what()});
    }
  }
  return results;
}

}  // namespace chdqn
