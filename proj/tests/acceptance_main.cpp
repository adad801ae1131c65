// Acceptance suite. Prints one PASS/FAIL (or WARN) line per criterion and
// exits non-zero if any hard criterion fails. Criteria 7-10 train agents and
// take several minutes.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "chdqn/chebyshev.hpp"
#include "chdqn/environments.hpp"
#include "chdqn/experiment.hpp"
#include "chdqn/neural_net.hpp"
#include "chdqn/random.hpp"
#include "chdqn/replay_buffer.hpp"

namespace fs = std::filesystem;
using namespace chdqn;

namespace {

enum class Verdict { kPass, kFail, kWarn };

struct Line {
  Verdict verdict;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch_root() {
  auto dir = fs::temp_directory_path() / "chdqn_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Line polynomial_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int n = 0; n <= 12; ++n) {
    for (int i = 0; i <= 1000; ++i) {
      const double x = -1.0 + 2.0 * i / 1000.0;
      worst = std::max(worst, std::abs(chebyshev_t(n, x) - std::cos(n * std::acos(x))));
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-12 && secs < 1.0 ? Verdict::kPass : Verdict::kFail,
          "max error " + fmt(worst) + ", " + fmt(secs) + " s"};
}

Line orthogonality() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int n = 0; n <= 8; ++n) {
    for (int m = 0; m <= 8; ++m) {
      const double want = n != m ? 0.0 : (n == 0 ? std::numbers::pi : std::numbers::pi / 2);
      worst = std::max(worst, std::abs(gauss_chebyshev_inner_product(n, m, 32) - want));
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-10 && secs < 1.0 ? Verdict::kPass : Verdict::kFail,
          "max error " + fmt(worst) + ", " + fmt(secs) + " s"};
}

Line parameter_table() {
  const std::size_t cartpole[] = {4'610, 5'634, 6'146, 6'658};
  bool ok = true;
  const auto models = standard_models();
  for (std::size_t i = 0; i < models.size(); ++i) {
    ok = ok && count_parameters(EnvId::kCartPole, models[i]) == cartpole[i];
  }
  // Independent arithmetic for the other two environments.
  auto oracle = [](std::size_t in, std::size_t h, std::size_t out) {
    return in * h + h + h * h + h + h * out + out;
  };
  for (const auto& m : models) {
    const std::size_t k = m.arch == Architecture::kMlp ? 1 : static_cast<std::size_t>(m.degree + 1);
    ok = ok && count_parameters(EnvId::kMountainCar, m) == oracle(2 * k, 64, 3);
    ok = ok && count_parameters(EnvId::kAcrobot, m) == oracle(6 * k, 128, 3);
  }
  return {ok ? Verdict::kPass : Verdict::kFail,
          "cartpole 4610/5634/6146/6658; mountaincar and acrobot against sum(out*in+out)"};
}

Line gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20240601);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    NetworkSpec spec{1 + rng.index(8), {}, 1 + rng.index(4)};
    for (std::size_t d = 0, depth = 1 + rng.index(2); d < depth; ++d) {
      spec.hidden.push_back(2 + rng.index(10));
    }
    Network net(spec);
    net.init_glorot(rng);
    for (double& p : net.mutable_parameters()) p += rng.uniform(-0.05, 0.05);
    std::vector<double> x(spec.input_dim);
    for (double& v : x) v = rng.uniform(-1, 1);
    const std::size_t a = rng.index(spec.output_dim);
    const double y = rng.uniform(-3, 3);

    std::vector<double> analytic(net.parameter_count(), 0.0);
    net.forward_cached(x);
    net.accumulate_gradient(a, y, analytic);

    auto params = net.mutable_parameters();
    double diff = 0.0, norm_a = 0.0, norm_n = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + 1e-5;
      const double up = std::pow(y - net.forward(x)[a], 2);
      params[i] = saved - 1e-5;
      const double down = std::pow(y - net.forward(x)[a], 2);
      params[i] = saved;
      const double numeric = (up - down) / 2e-5;
      diff += std::pow(numeric - analytic[i], 2);
      norm_a += analytic[i] * analytic[i];
      norm_n += numeric * numeric;
    }
    const double rel = std::sqrt(diff) / std::max({std::sqrt(norm_a), std::sqrt(norm_n), 1e-12});
    worst = std::max(worst, rel);
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-5 && secs < 10.0 ? Verdict::kPass : Verdict::kFail,
          "worst relative error " + fmt(worst) + ", " + fmt(secs) + " s"};
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

Line environment_fixtures() {
  double worst = 0.0;
  CartPole cp;
  cp.set_internal_state(std::vector<double>{0, 0, 0, 0});
  worst = std::max(worst, max_abs_diff(cp.step(1).state.observation,
                                       {0.0, 0.19512195121951219512, 0.0, -0.29268292682926829268}));
  cp.set_internal_state(std::vector<double>{0.01, -0.02, 0.03, 0.04});
  worst = std::max(worst, max_abs_diff(cp.step(0).state.observation,
                                       {0.0096, -0.21553901710278938789, 0.0308,
                                        0.34199522377603919399}));
  MountainCar mc;
  mc.set_internal_state(std::vector<double>{-0.5, 0.0});
  worst = std::max(worst, max_abs_diff(mc.step(1).state.observation,
                                       {-0.50017684300416925728, -0.00017684300416925727522}));
  mc.set_internal_state(std::vector<double>{-0.5, 0.0});
  worst = std::max(worst, max_abs_diff(mc.step(2).state.observation,
                                       {-0.49917684300416925728, 0.00082315699583074272478}));
  Acrobot ac;
  ac.set_internal_state(std::vector<double>{0.05, -0.03, 0.02, 0.01});
  worst = std::max(
      worst, max_abs_diff(ac.step(2).state.observation,
                          {0.99942326969182661972, 0.033957738418487100414, 0.99990160422571407766,
                           0.014027896023404484512, -0.17546465025153687622,
                           0.41971560226526895951}));

  // Caps: a balancing controller on CartPole, idle actions elsewhere.
  bool caps = true;
  Rng rng(0);
  cp.reset(rng);
  while (!cp.state().done()) {
    const auto& o = cp.state().observation;
    cp.step(o[2] + 0.5 * o[3] + 0.01 * o[0] + 0.1 * o[1] > 0 ? 1 : 0);
  }
  caps = caps && cp.steps() == 500 && cp.state().truncated && !cp.state().terminated;
  mc.reset(rng);
  while (!mc.state().done()) mc.step(1);
  caps = caps && mc.steps() == 200 && mc.state().truncated;
  ac.reset(rng);
  while (!ac.state().done()) ac.step(1);
  caps = caps && ac.steps() == 500 && ac.state().truncated;

  return {worst < 1e-9 && caps ? Verdict::kPass : Verdict::kFail,
          "max fixture error " + fmt(worst) + ", caps 500/200/500 " + (caps ? "ok" : "violated")};
}

Line shaping_soundness() {
  constexpr double gamma = 0.99, k = 0.1;
  double worst = 0.0;
  bool exact_raw = true;
  Rng rng(7);
  for (int ep = 0; ep < 5; ++ep) {
    Acrobot env;
    env.reset(rng);
    std::vector<std::vector<double>> states{env.state().observation};
    double bonus = 0.0;
    bool terminated = false;
    while (!env.state().done()) {
      const auto s = shaped_step(env, static_cast<int>(rng.index(3)), {k, gamma});
      bonus += s.shaped_reward - s.raw.reward;
      states.push_back(s.raw.state.observation);
      terminated = s.raw.state.terminated;
    }
    // sum_t gamma*Phi(s_{t+1}) - Phi(s_t) regrouped by state.
    auto phi = [&](const std::vector<double>& o) {
      return k * (-o[0] - (o[0] * o[2] - o[1] * o[3]));
    };
    const std::size_t T = states.size() - 1;
    double telescoped = -phi(states[0]) + (terminated ? 0.0 : gamma * phi(states[T]));
    for (std::size_t t = 1; t < T; ++t) telescoped += (gamma - 1.0) * phi(states[t]);
    worst = std::max(worst, std::abs(bonus - telescoped));

    Acrobot plain;
    plain.reset(rng);
    while (!plain.state().done()) {
      const auto s = shaped_step(plain, static_cast<int>(rng.index(3)), {0.0, gamma});
      exact_raw = exact_raw && s.shaped_reward == s.raw.reward;
    }
  }
  return {worst < 1e-9 && exact_raw ? Verdict::kPass : Verdict::kFail,
          "telescoping error " + fmt(worst) + ", k=0 bit-exact " + (exact_raw ? "yes" : "no")};
}

int run_cli(const std::string& args) {
  const std::string cmd = "\"" CHDQN_CLI_PATH "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Line determinism(const fs::path& root) {
  const std::string common = " --env cartpole-v1 --arch cheb --degree 4 --seeds 3 --episodes 60 --quiet";
  const fs::path a = root / "det_a", b = root / "det_b";
  if (run_cli("train --out " + a.string() + common) != 0 ||
      run_cli("train --out " + b.string() + common) != 0) {
    return {Verdict::kFail, "train command failed"};
  }
  const std::string name = "cartpole-v1_cheb4_seed3.csv";
  const std::string x = slurp(a / name), y = slurp(b / name);
  const bool same = !x.empty() && x == y;
  return {same ? Verdict::kPass : Verdict::kFail,
          same ? std::to_string(x.size()) + " identical bytes" : "CSV files differ"};
}

std::vector<RunResult> train(EnvId env, ModelSpec model, const fs::path& out,
                             std::optional<double> threshold, bool stop) {
  auto cfg = default_experiment(env, model);
  cfg.out_dir = out;
  cfg.progress = false;
  if (threshold) cfg.threshold = *threshold;
  cfg.stop_at_threshold = stop;
  const auto t0 = std::chrono::steady_clock::now();
  auto results = run_experiment(cfg);
  std::cerr << "  trained " << env_name(env) << " " << model.label() << " x" << results.size()
            << " seeds in " << fmt(seconds_since(t0)) << " s\n";
  return results;
}

Line cartpole_smoke(const std::vector<RunResult>& cheb4) {
  int reached = 0;
  std::string detail;
  for (const auto& r : cheb4) {
    const auto k = episodes_to_threshold(r.episodes, 100, 150.0);
    reached += k.has_value();
    detail += "seed" + std::to_string(r.seed) + ":" + (k ? "ep" + std::to_string(*k) : "never") + " ";
  }
  return {reached >= 2 ? Verdict::kPass : Verdict::kFail,
          std::to_string(reached) + "/3 seeds reach trailing-100 >= 150 (" + detail + ")"};
}

Line mountaincar_ordering(const fs::path& root) {
  auto medians = [&](double threshold) {
    const auto cheb = train(EnvId::kMountainCar, ModelSpec::chebyshev(4),
                            root / ("mc_cheb4_" + fmt(-threshold)), threshold, true);
    const auto mlp = train(EnvId::kMountainCar, ModelSpec::mlp(), root / ("mc_mlp_" + fmt(-threshold)),
                           threshold, true);
    return std::pair{aggregate(cheb).median_episodes_to_threshold,
                     aggregate(mlp).median_episodes_to_threshold};
  };
  double threshold = -130.0;
  auto [cheb, mlp] = medians(threshold);
  if (std::isinf(cheb) || std::isinf(mlp)) {
    threshold = -140.0;
    std::tie(cheb, mlp) = medians(threshold);
  }
  return {cheb < mlp ? Verdict::kPass : Verdict::kFail,
          "threshold " + fmt(threshold) + ": median episodes cheb4 " + fmt(cheb) + " vs mlp " +
              fmt(mlp)};
}

Line degree_sensitivity(const std::vector<RunResult>& cheb4, const std::vector<RunResult>& cheb8) {
  int below = 0;
  std::string detail;
  for (std::size_t i = 0; i < cheb4.size() && i < cheb8.size(); ++i) {
    const double s4 = cheb4[i].final_score.value_or(NAN);
    const double s8 = cheb8[i].final_score.value_or(NAN);
    below += s8 < s4;
    detail += "seed" + std::to_string(cheb4[i].seed) + " " + fmt(s8) + " vs " + fmt(s4) + "; ";
  }
  return {2 * below > static_cast<int>(cheb4.size()) ? Verdict::kPass : Verdict::kWarn,
          "N=8 below N=4 on " + std::to_string(below) + "/" + std::to_string(cheb4.size()) +
              " seeds (" + detail + ")"};
}

Line replay_uniformity() {
  ReplayBuffer buf(4);
  for (int i = 0; i < 4; ++i) buf.push({{0.0}, 0, static_cast<double>(i), {0.0}, false});
  Rng rng(11);
  int counts[4] = {0, 0, 0, 0};
  for (int d = 0; d < 10'000; ++d) ++counts[static_cast<int>((*buf.sample(1, rng))[0]->reward)];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 2500.0) * (c - 2500.0) / 2500.0;
  const double critical = 11.3449;  // 99th percentile, 3 degrees of freedom
  return {chi2 < critical ? Verdict::kPass : Verdict::kFail,
          "chi2 " + fmt(chi2) + " < " + fmt(critical)};
}

}  // namespace

int main() {
  const fs::path root = scratch_root();
  bool hard_failure = false;
  auto report = [&](int id, const std::string& name, const std::function<Line()>& fn) {
    Line line;
    try {
      line = fn();
    } catch (const std::exception& e) {
      line = {Verdict::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = line.verdict == Verdict::kPass ? "PASS"
                      : line.verdict == Verdict::kWarn ? "WARN"
                                                       : "FAIL";
    hard_failure = hard_failure || line.verdict == Verdict::kFail;
    std::cout << tag << " [" << id << "] " << name << ": " << line.detail << std::endl;
  };

  report(1, "polynomial oracle", polynomial_oracle);
  report(2, "orthogonality", orthogonality);
  report(3, "parameter table", parameter_table);
  report(4, "gradient correctness", gradient_check);
  report(5, "environment fixtures", environment_fixtures);
  report(6, "shaping soundness", shaping_soundness);
  report(7, "determinism", [&] { return determinism(root); });

  std::vector<RunResult> cheb4, cheb8;
  report(8, "cartpole training smoke", [&] {
    cheb4 = train(EnvId::kCartPole, ModelSpec::chebyshev(4), root / "cp_cheb4", std::nullopt, false);
    return cartpole_smoke(cheb4);
  });
  report(9, "mountaincar efficiency ordering", [&] { return mountaincar_ordering(root); });
  report(10, "degree sensitivity", [&] {
    cheb8 = train(EnvId::kCartPole, ModelSpec::chebyshev(8), root / "cp_cheb8", std::nullopt, false);
    return degree_sensitivity(cheb4, cheb8);
  });
  report(11, "replay uniformity", replay_uniformity);

  fs::remove_all(root);
  std::cout << (hard_failure ? "acceptance: FAILED" : "acceptance: all hard criteria passed")
            << std::endl;
  return hard_failure ? 1 : 0;
}
