// Command-line entry point: train, sweep, params, report, check.
//
// Exit codes: 0 success, 1 check failure, 2 usage or configuration error,
// 3 I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chdqn/config_file.hpp"
#include "chdqn/errors.hpp"
#include "chdqn/experiment.hpp"
#include "chdqn/self_check.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace chdqn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

constexpr const char* kOutEnvVar = "CHDQN_OUT";
constexpr const char* kManifestName = "experiment.json";
constexpr const char* kSummaryName = "summary.md";

struct RunOverrides {
  std::string config_path;
  std::string out;
  std::string seeds;
  std::size_t episodes = 0;
  std::size_t window = 0;
  double threshold = 0.0;
  std::size_t jobs = 0;
  bool stop_at_threshold = false;
  bool quiet = false;

  CLI::Option* threshold_opt = nullptr;
  CLI::Option* stop_opt = nullptr;
};

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    unsigned long long value = 0;
    try {
      value = std::stoull(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + item + "'");
    }
    if (used != item.size()) throw ConfigError("bad seed '" + item + "'");
    seeds.push_back(value);
  }
  if (seeds.empty()) throw ConfigError("--seeds needs at least one value");
  return seeds;
}

/// Built-in defaults <- config file <- environment variable (out dir) <- flags.
ExperimentConfig resolve_cell(EnvId env, ModelSpec model, const std::optional<ConfigFile>& file,
                              const RunOverrides& o) {
  ExperimentConfig cfg = default_experiment(env, model);
  if (file) apply_config_file(*file, cfg);
  if (const char* from_env = std::getenv(kOutEnvVar); from_env && *from_env) cfg.out_dir = from_env;
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (!o.seeds.empty()) cfg.seeds = parse_seed_list(o.seeds);
  if (o.episodes > 0) cfg.agent.episodes = o.episodes;
  if (o.window > 0) cfg.window = o.window;
  if (o.threshold_opt && o.threshold_opt->count() > 0) cfg.threshold = o.threshold;
  if (o.stop_opt && o.stop_opt->count() > 0) cfg.stop_at_threshold = true;
  if (o.jobs > 0) cfg.jobs = o.jobs;
  if (o.quiet) cfg.progress = false;
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json cell_manifest(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["env"] = env_name(c.env);
  j["model"] = c.agent.model.label();
  j["seeds"] = c.seeds;
  j["window"] = c.window;
  j["threshold"] = c.threshold;
  j["stop_at_threshold"] = c.stop_at_threshold;
  const AgentConfig& a = c.agent;
  j["agent"] = {{"hidden", a.hidden},
                {"gamma", a.gamma},
                {"learning_rate", a.learning_rate},
                {"batch_size", a.batch_size},
                {"buffer_capacity", a.buffer_capacity},
                {"target_update_period", a.target_update_period},
                {"epsilon_start", a.epsilon.start},
                {"epsilon_end", a.epsilon.end},
                {"epsilon_decay_steps", a.epsilon.decay_steps},
                {"warmup_steps", a.warmup_steps},
                {"episodes", a.episodes},
                {"bootstrap_on_truncation", a.bootstrap_on_truncation},
                {"grad_clip_norm", a.grad_clip_norm}};
  if (a.shaping_coefficient) j["agent"]["shaping_coefficient"] = *a.shaping_coefficient;
  return j;
}

std::vector<SummarySection> build_sections(
    const std::vector<std::pair<ExperimentConfig, std::vector<RunResult>>>& cells) {
  std::vector<SummarySection> sections;
  for (const auto& [cfg, results] : cells) {
    auto it = std::find_if(sections.begin(), sections.end(),
                           [&](const SummarySection& s) { return s.env == cfg.env; });
    if (it == sections.end()) {
      sections.push_back({cfg.env, cfg.window, cfg.threshold, {}});
      it = sections.end() - 1;
    }
    it->rows.push_back(aggregate(results));
  }
  return sections;
}

void write_outputs(const fs::path& out_dir,
                   const std::vector<std::pair<ExperimentConfig, std::vector<RunResult>>>& cells) {
  nlohmann::ordered_json manifest;
  manifest["cells"] = nlohmann::ordered_json::array();
  for (const auto& [cfg, results] : cells) manifest["cells"].push_back(cell_manifest(cfg));
  write_text_file(out_dir / kManifestName, manifest.dump(2) + "\n");
  write_text_file(out_dir / kSummaryName, summary_markdown(build_sections(cells)));
}

int run_cells(const std::vector<ExperimentConfig>& cells) {
  // Every cell is validated before any training starts.
  for (const auto& c : cells) c.validate();
  const fs::path out_dir = cells.front().out_dir;
  for (const auto& c : cells) {
    if (c.out_dir != out_dir) throw ConfigError("all cells must share one output directory");
  }
  std::vector<std::pair<ExperimentConfig, std::vector<RunResult>>> done;
  for (const auto& c : cells) {
    auto results = run_experiment(c);
    for (const auto& r : results) {
      std::cerr << "[" << env_name(r.env) << " " << r.model.label() << " seed" << r.seed
                << "] finished " << r.episodes.size() << " episodes in " << r.wall_seconds
                << " s\n";
    }
    done.emplace_back(c, std::move(results));
  }
  write_outputs(out_dir, done);
  std::cout << "wrote " << (out_dir / kSummaryName).string() << '\n';
  return kExitOk;
}

void add_run_flags(CLI::App* cmd, RunOverrides& o) {
  cmd->add_option("--out", o.out,
                  std::string("Output directory (default: runs, or $") + kOutEnvVar + ")");
  cmd->add_option("--seeds", o.seeds, "Comma-separated seeds (default: 0,1,2)");
  cmd->add_option("--episodes", o.episodes,
                  "Episode budget per run (default: 500 cartpole, 2000 mountaincar, 1000 acrobot)");
  cmd->add_option("--window", o.window, "Trailing window for scores and thresholds (default: 100)");
  o.threshold_opt = cmd->add_option(
      "--threshold", o.threshold,
      "Solve threshold on the trailing mean (default: 195 cartpole, -110 mountaincar, -100 acrobot)");
  o.stop_opt = cmd->add_flag("--stop-at-threshold", o.stop_at_threshold,
                             "End each run once the threshold is reached (default: off)");
  cmd->add_option("--jobs", o.jobs, "Concurrent runs (default: 1)")->check(CLI::PositiveNumber);
  cmd->add_flag("--quiet", o.quiet, "Suppress per-window progress lines on stderr (default: off)");
}

int cmd_params(const std::string& env_text) {
  const EnvId env = parse_env_id(env_text);
  const auto hidden = default_hidden(env);
  bool mismatch = false;
  std::cout << "Trainable parameters for " << env_name(env) << "\n";
  std::cout << "Model           Layers              Computed  Published\n";
  for (const auto& model : standard_models()) {
    const NetworkSpec spec = network_spec_for(env, model, hidden);
    std::string layers = std::to_string(spec.input_dim);
    for (auto h : spec.hidden) layers += "-" + std::to_string(h);
    layers += "-" + std::to_string(spec.output_dim);
    const std::size_t computed = parameter_count(spec);
    const auto published = published_parameter_count(env, model);
    std::string name = model_display_name(model);
    std::cout << name << std::string(16 - std::min<std::size_t>(name.size(), 15), ' ') << layers
              << std::string(20 - std::min<std::size_t>(layers.size(), 19), ' ') << computed;
    if (published) {
      std::cout << std::string(10 - std::min<std::size_t>(std::to_string(computed).size(), 9), ' ')
                << *published;
      if (*published != computed) {
        std::cout << "  (differs)";
        mismatch = true;
      }
    }
    std::cout << '\n';
  }
  if (mismatch) {
    std::cout << "note: the published totals for " << env_name(env)
              << " are not reproduced by the stated layer sizes; computed values are "
                 "sum(out*in + out) over the layers listed.\n";
  }
  return kExitOk;
}

int cmd_report(const fs::path& out_dir) {
  const fs::path manifest_path = out_dir / kManifestName;
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot read " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  std::vector<std::pair<ExperimentConfig, std::vector<RunResult>>> cells;
  try {
    for (const auto& cell : manifest.at("cells")) {
      const EnvId env = parse_env_id(cell.at("env").get<std::string>());
      const ModelSpec model = ModelSpec::parse(cell.at("model").get<std::string>());
      ExperimentConfig cfg = default_experiment(env, model);
      cfg.window = cell.at("window").get<std::size_t>();
      cfg.threshold = cell.at("threshold").get<double>();
      cfg.seeds = cell.at("seeds").get<std::vector<std::uint64_t>>();
      cfg.agent.hidden = cell.at("agent").at("hidden").get<std::vector<std::size_t>>();
      cfg.out_dir = out_dir;
      std::vector<RunResult> results;
      for (auto seed : cfg.seeds) {
        RunResult r;
        r.env = env;
        r.model = model;
        r.seed = seed;
        r.parameters = parameter_count(network_spec_for(env, model, cfg.agent.hidden));
        for (const auto& row : read_learning_curve(curve_path(out_dir, env, model, seed))) {
          r.episodes.push_back(row.record);
        }
        r.final_score = final_score(r.episodes, cfg.window);
        r.episodes_to_threshold = episodes_to_threshold(r.episodes, cfg.window, cfg.threshold);
        results.push_back(std::move(r));
      }
      cells.emplace_back(std::move(cfg), std::move(results));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  if (cells.empty()) throw DataError(manifest_path.string() + ": no cells");
  write_text_file(out_dir / kSummaryName, summary_markdown(build_sections(cells)));
  std::cout << "wrote " << (out_dir / kSummaryName).string() << '\n';
  return kExitOk;
}

int cmd_check(bool perturb) {
  const auto results = run_self_checks({.perturb_gradient = perturb});
  bool all = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  (" << r.detail << ")\n";
    all = all && r.passed;
  }
  std::cout << (all ? "all checks passed" : "some checks FAILED") << '\n';
  return all ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chebyshev-feature deep Q-learning toolkit"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train one (environment, model) over several seeds");
  RunOverrides train_opts;
  std::string env_flag;
  std::string arch_flag;
  int degree = 4;
  train->add_option("--config", train_opts.config_path, "TOML config file (default: none)")
      ->check(CLI::ExistingFile);
  train->add_option("--env", env_flag,
                    "cartpole-v1 | mountaincar-v0 | acrobot-v1 (default: cartpole-v1)");
  train->add_option("--arch", arch_flag, "mlp | cheb (default: cheb)")
      ->check(CLI::IsMember({"mlp", "cheb"}));
  auto* degree_opt =
      train->add_option("--degree", degree, "Chebyshev degree N, cheb only (default: 4)")
          ->check(CLI::NonNegativeNumber);
  add_run_flags(train, train_opts);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run every (env, model) cell of a config grid");
  RunOverrides sweep_opts;
  sweep->add_option("--config", sweep_opts.config_path, "TOML config file with a [sweep] table")
      ->required()
      ->check(CLI::ExistingFile);
  add_run_flags(sweep, sweep_opts);

  // params
  auto* params = app.add_subcommand("params", "Print the trainable-parameter table");
  std::string params_env;
  params->add_option("--env", params_env, "Environment id (required)")->required();

  // report
  auto* report = app.add_subcommand("report", "Rebuild summary.md from the CSVs in a run directory");
  std::string report_dir;
  report->add_option("--out", report_dir, "Run directory (default: runs, or $CHDQN_OUT)");

  // check
  auto* check = app.add_subcommand("check", "Run the fast numerical verification suite");
  bool perturb = false;
  check->add_flag("--perturb-gradient", perturb,
                  "Test hook: corrupt analytic gradients so the gradient check fails (default: off)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) {
      std::optional<ConfigFile> file;
      if (!train_opts.config_path.empty()) {
        file = ConfigFile::load(train_opts.config_path);
        check_config_keys(*file);
      }
      if (file && file->contains("sweep.envs")) {
        throw ConfigError("train does not accept a [sweep] table; use the sweep command");
      }
      std::string env_text = env_flag;
      if (env_text.empty() && file) env_text = file->string("env").value_or("");
      if (env_text.empty()) env_text = "cartpole-v1";
      std::string arch = arch_flag;
      if (arch.empty() && file) arch = file->string("arch").value_or("");
      if (arch.empty()) arch = "cheb";
      if (arch == "mlp" && degree_opt->count() > 0) {
        throw ConfigError("--degree only applies to --arch cheb");
      }
      if (degree_opt->count() == 0 && file) {
        if (auto d = file->integer("degree")) degree = static_cast<int>(*d);
      }
      ModelSpec model;
      if (arch == "mlp") {
        model = ModelSpec::mlp();
      } else if (arch == "cheb") {
        model = ModelSpec::chebyshev(degree);
      } else {
        throw ConfigError("unknown arch '" + arch + "' (expected mlp or cheb)");
      }
      return run_cells({resolve_cell(parse_env_id(env_text), model, file, train_opts)});
    }

    if (*sweep) {
      const ConfigFile file = ConfigFile::load(sweep_opts.config_path);
      check_config_keys(file);
      auto envs = file.string_list("sweep.envs");
      auto models = file.string_list("sweep.models");
      if (!envs || !models || envs->empty() || models->empty()) {
        throw ConfigError("sweep needs non-empty sweep.envs and sweep.models lists");
      }
      std::vector<ExperimentConfig> cells;
      for (const auto& e : *envs) {
        for (const auto& m : *models) {
          cells.push_back(resolve_cell(parse_env_id(e), ModelSpec::parse(m), file, sweep_opts));
        }
      }
      return run_cells(cells);
    }

    if (*params) return cmd_params(params_env);

    if (*report) {
      fs::path dir = "runs";
      if (const char* from_env = std::getenv(kOutEnvVar); from_env && *from_env) dir = from_env;
      if (!report_dir.empty()) dir = report_dir;
      return cmd_report(dir);
    }

    if (*check) return cmd_check(perturb);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}
