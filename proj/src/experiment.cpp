#include "chdqn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <iostream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "chdqn/errors.hpp"
#include "chdqn/numeric_text.hpp"

namespace chdqn {

// Defaults -------------------------------------------------------------------

std::vector<std::size_t> default_hidden(EnvId env) {
  return env == EnvId::kAcrobot ? std::vector<std::size_t>{128, 128}
                                : std::vector<std::size_t>{64, 64};
}

double default_threshold(EnvId env) {
  switch (env) {
    case EnvId::kCartPole: return 195.0;
    case EnvId::kMountainCar: return -110.0;
    case EnvId::kAcrobot: return -100.0;
  }
  return 0.0;
}

AgentConfig default_agent_config(EnvId env, ModelSpec model) {
  AgentConfig c;
  c.model = model;
  c.hidden = default_hidden(env);
  switch (env) {
    case EnvId::kCartPole:
      c.learning_rate = 1e-3;
      c.epsilon = {1.0, 0.05, 10'000};
      c.episodes = 500;
      break;
    case EnvId::kMountainCar:
      c.learning_rate = 1e-3;
      c.epsilon = {1.0, 0.05, 10'000};
      c.episodes = 2'000;
      break;
    case EnvId::kAcrobot:
      c.learning_rate = 5e-4;
      c.epsilon = {1.0, 0.05, 20'000};
      c.episodes = 1'000;
      c.shaping_coefficient = 0.1;
      break;
  }
  return c;
}

ExperimentConfig default_experiment(EnvId env, ModelSpec model) {
  ExperimentConfig c;
  c.env = env;
  c.agent = default_agent_config(env, model);
  c.threshold = default_threshold(env);
  return c;
}

void ExperimentConfig::validate() const {
  agent.validate();
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  if (window == 0) throw ConfigError("metric window must be >= 1");
  if (jobs == 0) throw ConfigError("jobs must be >= 1");
  if (agent.shaping_coefficient && env != EnvId::kAcrobot) {
    throw ConfigError("reward shaping is only supported on acrobot-v1");
  }
  if (!std::isfinite(threshold)) throw ConfigError("threshold must be finite");
}

// Config files -----------------------------------------------------------------

namespace {

std::size_t to_size(std::int64_t v, const char* key) {
  if (v < 0) throw ConfigError(std::string(key) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "env", "arch", "degree", "seeds", "out", "window", "threshold", "stop_at_threshold", "jobs",
      "agent.hidden", "agent.gamma", "agent.learning_rate", "agent.batch_size",
      "agent.buffer_capacity", "agent.target_update_period", "agent.epsilon_start",
      "agent.epsilon_end", "agent.epsilon_decay_steps", "agent.warmup_steps", "agent.episodes",
      "agent.bootstrap_on_truncation", "agent.grad_clip_norm", "agent.shaping_coefficient",
      "sweep.envs", "sweep.models"};
  return keys;
}

}  // namespace

void check_config_keys(const ConfigFile& file) {
  for (const auto& key : file.keys()) {
    if (known_keys().contains(key)) continue;
    if (key.starts_with("thresholds.")) {
      parse_env_id(key.substr(std::string("thresholds.").size()));
      continue;
    }
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void apply_config_file(const ConfigFile& file, ExperimentConfig& c) {
  if (auto seeds = file.integer_list("seeds")) {
    c.seeds.clear();
    for (auto s : *seeds) c.seeds.push_back(static_cast<std::uint64_t>(to_size(s, "seeds")));
  }
  if (auto out = file.string("out")) c.out_dir = *out;
  if (auto w = file.integer("window")) c.window = to_size(*w, "window");
  if (auto t = file.number("threshold")) c.threshold = *t;
  if (auto t = file.number("thresholds." + env_name(c.env))) c.threshold = *t;
  if (auto s = file.boolean("stop_at_threshold")) c.stop_at_threshold = *s;
  if (auto j = file.integer("jobs")) c.jobs = to_size(*j, "jobs");

  AgentConfig& a = c.agent;
  if (auto h = file.integer_list("agent.hidden")) {
    a.hidden.clear();
    for (auto w : *h) a.hidden.push_back(to_size(w, "agent.hidden"));
  }
  if (auto v = file.number("agent.gamma")) a.gamma = *v;
  if (auto v = file.number("agent.learning_rate")) a.learning_rate = *v;
  if (auto v = file.integer("agent.batch_size")) a.batch_size = to_size(*v, "agent.batch_size");
  if (auto v = file.integer("agent.buffer_capacity")) {
    a.buffer_capacity = to_size(*v, "agent.buffer_capacity");
  }
  if (auto v = file.integer("agent.target_update_period")) {
    a.target_update_period = to_size(*v, "agent.target_update_period");
  }
  if (auto v = file.number("agent.epsilon_start")) a.epsilon.start = *v;
  if (auto v = file.number("agent.epsilon_end")) a.epsilon.end = *v;
  if (auto v = file.integer("agent.epsilon_decay_steps")) {
    a.epsilon.decay_steps = to_size(*v, "agent.epsilon_decay_steps");
  }
  if (auto v = file.integer("agent.warmup_steps")) a.warmup_steps = to_size(*v, "agent.warmup_steps");
  if (auto v = file.integer("agent.episodes")) a.episodes = to_size(*v, "agent.episodes");
  if (auto v = file.boolean("agent.bootstrap_on_truncation")) a.bootstrap_on_truncation = *v;
  if (auto v = file.number("agent.grad_clip_norm")) a.grad_clip_norm = *v;
  if (auto v = file.number("agent.shaping_coefficient")) {
    // Shaping keys only make sense for Acrobot; a sweep may mix environments.
    if (c.env == EnvId::kAcrobot) a.shaping_coefficient = *v;
  }
}

// Metrics -------------------------------------------------------------------

double trailing_mean(std::span<const EpisodeRecord> episodes, std::size_t k, std::size_t window) {
  if (k == 0 || k > episodes.size() || window == 0) throw UsageError("trailing_mean: bad index");
  const std::size_t first = k > window ? k - window : 0;
  double sum = 0.0;
  for (std::size_t i = first; i < k; ++i) sum += episodes[i].raw_return;
  return sum / static_cast<double>(k - first);
}

std::optional<double> final_score(std::span<const EpisodeRecord> episodes, std::size_t window) {
  if (window == 0 || episodes.size() < window) return std::nullopt;
  return trailing_mean(episodes, episodes.size(), window);
}

std::optional<std::size_t> episodes_to_threshold(std::span<const EpisodeRecord> episodes,
                                                 std::size_t window, double threshold) {
  if (window == 0) return std::nullopt;
  for (std::size_t k = window; k <= episodes.size(); ++k) {
    if (trailing_mean(episodes, k, window) >= threshold) return k;
  }
  return std::nullopt;
}

// CSV -------------------------------------------------------------------------

std::filesystem::path curve_path(const std::filesystem::path& out_dir, EnvId env,
                                 const ModelSpec& model, std::uint64_t seed) {
  return out_dir / (env_name(env) + "_" + model.label() + "_seed" + std::to_string(seed) + ".csv");
}

LearningCurveWriter::LearningCurveWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  out_ << kHeader << '\n';
  out_.flush();
  if (!out_) throw IoError("write failed for " + path_.string());
}

void LearningCurveWriter::append(const EpisodeRecord& r, double trailing) {
  out_ << r.episode << ',' << r.steps << ',' << format_double(r.raw_return) << ','
       << format_double(trailing) << ',' << format_double(r.epsilon) << ',' << r.global_step << ','
       << format_double(r.loss_mean) << '\n';
  out_.flush();
  if (!out_) throw IoError("write failed for " + path_.string());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::uint64_t parse_count(const std::string& text, const std::filesystem::path& path) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw DataError(path.string() + ": bad integer field '" + text + "'");
  }
  return v;
}

}  // namespace

std::vector<CurveRow> read_learning_curve(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != LearningCurveWriter::kHeader) {
    throw DataError(path.string() + ": unexpected header");
  }
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw DataError(path.string() + ": expected 7 fields");
    CurveRow row;
    row.record.episode = parse_count(f[0], path);
    row.record.steps = parse_count(f[1], path);
    row.record.raw_return = parse_double(f[2]);
    row.trailing_mean = parse_double(f[3]);
    row.record.epsilon = parse_double(f[4]);
    row.record.global_step = parse_count(f[5], path);
    row.record.loss_mean = parse_double(f[6]);
    rows.push_back(row);
  }
  return rows;
}

void emit_learning_curve(const RunResult& result, std::size_t window,
                         const std::filesystem::path& path) {
  LearningCurveWriter writer(path);
  for (std::size_t k = 1; k <= result.episodes.size(); ++k) {
    writer.append(result.episodes[k - 1], trailing_mean(result.episodes, k, window));
  }
}

// Runs ------------------------------------------------------------------------

namespace {

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

RunResult run_single(const ExperimentConfig& config, std::uint64_t seed,
                     const std::optional<std::filesystem::path>& csv) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  Rng init_rng = make_stream(seed, Stream::kWeightInit);
  Rng env_rng = make_stream(seed, Stream::kEnvironment);
  Rng agent_rng = make_stream(seed, Stream::kAgent);

  auto env = make_environment(config.env);
  Agent agent(config.agent, config.env, init_rng);

  RunResult result;
  result.env = config.env;
  result.model = config.agent.model;
  result.seed = seed;
  result.parameters = agent.policy().parameter_count();

  std::optional<LearningCurveWriter> writer;
  if (csv) writer.emplace(*csv);

  const std::string tag =
      "[" + env_name(config.env) + " " + config.agent.model.label() + " seed" + std::to_string(seed) + "]";
  for (std::size_t e = 0; e < config.agent.episodes; ++e) {
    env->reset(env_rng);
    result.episodes.push_back(agent.run_episode(*env, agent_rng));
    const std::size_t k = result.episodes.size();
    const double trailing = trailing_mean(result.episodes, k, config.window);
    if (writer) writer->append(result.episodes.back(), trailing);
    if (config.progress && k % config.window == 0) {
      std::lock_guard lock(log_mutex());
      std::cerr << tag << " episode " << k << " trailing_mean " << trailing << " epsilon "
                << result.episodes.back().epsilon << '\n';
    }
    if (config.stop_at_threshold && k >= config.window && trailing >= config.threshold) break;
  }

  result.final_score = final_score(result.episodes, config.window);
  result.episodes_to_threshold = episodes_to_threshold(result.episodes, config.window, config.threshold);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec || !std::filesystem::is_directory(config.out_dir)) {
    throw IoError("cannot create output directory " + config.out_dir.string());
  }

  std::vector<RunResult> results(config.seeds.size());
  std::vector<std::exception_ptr> errors(config.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < config.seeds.size(); i = next++) {
      try {
        const auto seed = config.seeds[i];
        results[i] = run_single(config, seed, curve_path(config.out_dir, config.env,
                                                         config.agent.model, seed));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(config.jobs, config.seeds.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

// Aggregation -----------------------------------------------------------------

double median_with_unsolved(std::vector<std::optional<std::size_t>> values) {
  if (values.empty()) throw UsageError("median of an empty set");
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> v;
  for (const auto& x : values) v.push_back(x ? static_cast<double>(*x) : inf);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  const double lo = v[n / 2 - 1];
  const double hi = v[n / 2];
  return std::isinf(hi) ? inf : (lo + hi) / 2.0;
}

AggregateResult aggregate(std::span<const RunResult> results) {
  if (results.empty()) throw UsageError("aggregate needs at least one run");
  AggregateResult agg;
  agg.env = results.front().env;
  agg.model = results.front().model;
  agg.parameters = results.front().parameters;
  agg.runs = results.size();

  std::vector<double> scores;
  std::vector<std::optional<std::size_t>> solved;
  for (const auto& r : results) {
    if (r.final_score) scores.push_back(*r.final_score);
    solved.push_back(r.episodes_to_threshold);
  }
  agg.scored_runs = scores.size();
  if (scores.empty()) {
    agg.mean_final = std::numeric_limits<double>::quiet_NaN();
  } else {
    double sum = 0.0;
    for (double s : scores) sum += s;
    agg.mean_final = sum / static_cast<double>(scores.size());
    if (scores.size() > 1) {
      double sq = 0.0;
      for (double s : scores) sq += (s - agg.mean_final) * (s - agg.mean_final);
      agg.std_final = std::sqrt(sq / static_cast<double>(scores.size() - 1));
    }
  }
  agg.single_seed = scores.size() == 1;
  agg.median_episodes_to_threshold = median_with_unsolved(std::move(solved));
  return agg;
}

// Parameter accounting --------------------------------------------------------

std::size_t count_parameters(EnvId env, const ModelSpec& model) {
  return parameter_count(network_spec_for(env, model, default_hidden(env)));
}

std::optional<std::size_t> published_parameter_count(EnvId env, const ModelSpec& model) {
  struct Entry {
    EnvId env;
    const char* model;
    std::size_t count;
  };
  static constexpr Entry kTable[] = {
      {EnvId::kCartPole, "mlp", 4'610},     {EnvId::kCartPole, "cheb4", 5'634},
      {EnvId::kCartPole, "cheb6", 6'146},   {EnvId::kCartPole, "cheb8", 6'658},
      {EnvId::kMountainCar, "mlp", 4'483},  {EnvId::kMountainCar, "cheb4", 5'027},
      {EnvId::kMountainCar, "cheb6", 5'355}, {EnvId::kMountainCar, "cheb8", 5'683},
      {EnvId::kAcrobot, "mlp", 17'411},     {EnvId::kAcrobot, "cheb4", 19'715},
      {EnvId::kAcrobot, "cheb6", 21'251},   {EnvId::kAcrobot, "cheb8", 22'787},
  };
  const std::string label = model.label();
  for (const auto& e : kTable) {
    if (e.env == env && label == e.model) return e.count;
  }
  return std::nullopt;
}

std::vector<ModelSpec> standard_models() {
  return {ModelSpec::mlp(), ModelSpec::chebyshev(4), ModelSpec::chebyshev(6),
          ModelSpec::chebyshev(8)};
}

// Reports ---------------------------------------------------------------------

std::string model_display_name(const ModelSpec& model) {
  if (model.arch == Architecture::kMlp) return "Standard DQN";
  return "Ch-DQN (N=" + std::to_string(model.degree) + ")";
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string thousands(std::size_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

}  // namespace

std::string summary_markdown(std::span<const SummarySection> sections) {
  std::ostringstream md;
  md << "# Results\n";
  for (const auto& section : sections) {
    md << "\n## " << env_name(section.env) << "\n\n";
    md << "Final score: mean raw return over the last " << section.window
       << " episodes of each run. Threshold: trailing-" << section.window << " mean >= "
       << format_double(section.threshold) << ".\n\n";
    md << "| Model | Final Score (mean ± std) | Episodes-to-Threshold (median) | Parameters |\n";
    md << "|---|---|---|---|\n";
    for (const auto& row : section.rows) {
      std::string score = "n/a";
      if (row.scored_runs > 0) {
        score = fixed(row.mean_final, 1) + " ± " + fixed(row.std_final, 1);
        if (row.single_seed) score += " (single seed)";
      }
      const std::string median = std::isinf(row.median_episodes_to_threshold)
                                     ? "not reached"
                                     : fixed(row.median_episodes_to_threshold, 1);
      md << "| " << model_display_name(row.model) << " | " << score << " | " << median << " | "
         << thousands(row.parameters) << " |\n";
    }
  }
  return md.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace chdqn
