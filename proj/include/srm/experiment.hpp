#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "srm/agents.hpp"
#include "srm/environments.hpp"
#include "srm/metrics.hpp"
#include "srm/offline_data.hpp"
#include "srm/risk_spectra.hpp"

namespace srm {

enum class RunMode { Online, Offline, Tabular };

/// Builds the environment named by an `env` config object.
struct EnvSpec {
  std::string name = "trading";  // trading | portfolio | bandit | chain | deterministic | tabular
  std::string path;              // returns CSV (portfolio) or MDP JSON (tabular)
  double split = 0.8;            // portfolio: chronological train fraction
  bool train_split = true;       // portfolio: evaluate on the train or test part
  TradingParams trading;
  PortfolioParams portfolio;
};

std::unique_ptr<Environment> make_environment(const EnvSpec& spec);
/// Tabular MDP behind a tabular EnvSpec (fixture name or JSON path).
TabularMdp make_tabular_mdp(const EnvSpec& spec);

struct DatasetSpec {
  std::string path;           // load from here when `generator` is empty
  std::string generator;      // random | replay (empty: load `path`)
  std::size_t steps = 20000;  // transitions to generate
  std::string algorithm = "td3-srm";  // replay generator agent
  std::string spectrum = "neutral";   // replay generator objective
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  RunMode mode = RunMode::Online;
  EnvSpec env;
  Algorithm algorithm = Algorithm::Td3Srm;
  RiskSpectrum spectrum;
  AgentConfig agent;
  std::size_t steps = 50000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t eval_episodes = 1000;
  std::uint64_t eval_seed = 12345;
  double cvar_alpha = 0.2;
  std::optional<ScoreReference> reference;
  DatasetSpec dataset;
  std::string output_dir;      // empty: write nothing
  std::size_t threads = 0;     // 0: SRM_RL_THREADS or hardware concurrency
  std::size_t outer_iterations = 20;   // tabular
  std::size_t inner_iterations = 200;  // tabular
  double npg_eta = 0.5;                // tabular
};

/// Parses a JSON config, then applies `key=value` overrides on dotted paths
/// (`agent.lr=1e-3`, `env.name=bandit`). Values parse as JSON, else as strings.
/// Errors name the line and column (syntax) or the offending key (schema).
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Normalized-score reference used when the config gives none (trading only).
std::optional<ScoreReference> default_reference(const EnvSpec& env);

/// Dataset per the config: generated (and saved to `dataset.path` when set) or loaded.
TransitionDataset obtain_dataset(const ExperimentConfig& config);

/// Trains one agent per seed, evaluates greedy rollouts, and when `output_dir` is set
/// writes checkpoint_seed<k>.json, metrics.csv, report.json, returns.csv, risk_curve.csv.
EvalReport run_experiment(const ExperimentConfig& config);

/// Evaluates saved checkpoints (one per seed) on the configured environment.
EvalReport evaluate_checkpoints(const ExperimentConfig& config, const std::vector<std::string>& checkpoints);

struct RiskCurvePoint {
  double alpha = 0.0;
  double mean = 0.0;  // across seeds
  double std = 0.0;   // population std across seeds
};

/// Per-seed CVaR_alpha of returns (normalized when the report has a reference), for each level.
std::vector<RiskCurvePoint> risk_curve(const EvalReport& report, const std::vector<double>& levels);
/// Levels 0.1, 0.2, ..., 1.0.
std::vector<double> default_levels();
/// CSV with header `alpha,mean_score,std_score`.
std::string risk_curve_csv(const std::vector<RiskCurvePoint>& curve);

/// Writes metrics.csv, report.json, returns.csv and risk_curve.csv under `dir`.
void write_report_files(const EvalReport& report, const std::string& dir);

}  // namespace srm
