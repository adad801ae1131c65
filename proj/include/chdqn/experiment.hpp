#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chdqn/config_file.hpp"
#include "chdqn/dqn_agent.hpp"
#include "chdqn/environments.hpp"
#include "chdqn/neural_net.hpp"

namespace chdqn {

struct ExperimentConfig {
  EnvId env = EnvId::kCartPole;
  AgentConfig agent;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t window = 100;
  double threshold = 195.0;
  std::filesystem::path out_dir = "runs";
  bool stop_at_threshold = false;  // end a run once the trailing mean reaches threshold
  std::size_t jobs = 1;
  bool progress = true;  // one stderr line per window of episodes

  /// Throws ConfigError, including for env/agent combinations that are not
  /// meaningful (shaping outside Acrobot).
  void validate() const;
};

std::vector<std::size_t> default_hidden(EnvId env);
double default_threshold(EnvId env);
AgentConfig default_agent_config(EnvId env, ModelSpec model);
ExperimentConfig default_experiment(EnvId env, ModelSpec model);

/// Applies the experiment-level and [agent] keys of a config file. Keys that
/// select what to run (env, arch, degree, [sweep]) are handled by the caller.
void apply_config_file(const ConfigFile& file, ExperimentConfig& config);

/// Rejects keys no component understands.
void check_config_keys(const ConfigFile& file);

struct RunResult {
  EnvId env = EnvId::kCartPole;
  ModelSpec model;
  std::uint64_t seed = 0;
  std::vector<EpisodeRecord> episodes;
  std::optional<double> final_score;
  std::optional<std::size_t> episodes_to_threshold;
  std::size_t parameters = 0;
  double wall_seconds = 0.0;
};

/// Mean raw return over episodes max(1, k - window + 1) .. k (k is 1-based).
double trailing_mean(std::span<const EpisodeRecord> episodes, std::size_t k, std::size_t window);

/// Mean over the last `window` episodes; nullopt with fewer episodes.
std::optional<double> final_score(std::span<const EpisodeRecord> episodes, std::size_t window);

/// First episode k >= window whose trailing mean reaches `threshold`.
std::optional<std::size_t> episodes_to_threshold(std::span<const EpisodeRecord> episodes,
                                                 std::size_t window, double threshold);

/// <out>/<env>_<model>_seed<seed>.csv
std::filesystem::path curve_path(const std::filesystem::path& out_dir, EnvId env,
                                 const ModelSpec& model, std::uint64_t seed);

/// Header: episode,steps,raw_return,trailing_mean,epsilon,global_step,loss_mean
/// Each row is flushed as soon as it is written.
class LearningCurveWriter {
 public:
  static constexpr const char* kHeader =
      "episode,steps,raw_return,trailing_mean,epsilon,global_step,loss_mean";

  explicit LearningCurveWriter(const std::filesystem::path& path);
  void append(const EpisodeRecord& record, double trailing);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

struct CurveRow {
  EpisodeRecord record;
  double trailing_mean = 0.0;
};

std::vector<CurveRow> read_learning_curve(const std::filesystem::path& path);

/// Writes the whole curve of a finished (or partial) run.
void emit_learning_curve(const RunResult& result, std::size_t window,
                         const std::filesystem::path& path);

/// One complete training run. The seed is split into independent streams for
/// weight init, environment resets and agent randomness (exploration, then
/// minibatch sampling within each step). If `csv` is set, rows are appended as
/// episodes finish.
RunResult run_single(const ExperimentConfig& config, std::uint64_t seed,
                     const std::optional<std::filesystem::path>& csv = std::nullopt);

/// Every seed of the config, up to config.jobs at a time. Writes one CSV per run
/// under config.out_dir. Results are returned in seed order.
std::vector<RunResult> run_experiment(const ExperimentConfig& config);

struct AggregateResult {
  EnvId env = EnvId::kCartPole;
  ModelSpec model;
  std::size_t runs = 0;
  std::size_t scored_runs = 0;  // runs long enough to have a final score
  double mean_final = 0.0;
  double std_final = 0.0;  // sample std over seeds; 0 with a single seed
  bool single_seed = false;
  double median_episodes_to_threshold = 0.0;  // unsolved runs count as +inf
  std::size_t parameters = 0;
};

/// Throws UsageError for an empty input.
AggregateResult aggregate(std::span<const RunResult> results);

/// Median treating nullopt as +infinity.
double median_with_unsolved(std::vector<std::optional<std::size_t>> values);

/// Computed trainable parameters of the default architecture for (env, model):
/// input D (mlp) or D * (N + 1) (Chebyshev), hidden [64, 64] ([128, 128] on
/// Acrobot), A outputs.
std::size_t count_parameters(EnvId env, const ModelSpec& model);

/// Previously published totals for the four standard models, for comparison.
std::optional<std::size_t> published_parameter_count(EnvId env, const ModelSpec& model);

/// The four standard models: mlp, cheb4, cheb6, cheb8.
std::vector<ModelSpec> standard_models();

struct SummarySection {
  EnvId env;
  std::size_t window;
  double threshold;
  std::vector<AggregateResult> rows;
};

/// Markdown tables with columns Model, Final Score (mean ± std),
/// Episodes-to-Threshold (median), Parameters. One table per environment.
std::string summary_markdown(std::span<const SummarySection> sections);

void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Human-readable model name used in reports, e.g. "Ch-DQN (N=4)".
std::string model_display_name(const ModelSpec& model);

}  // namespace chdqn
