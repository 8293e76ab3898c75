#pragma once

#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace srm {

using Rng = std::mt19937_64;

/// (base observation, accumulated discounted reward s, discount product c).
struct ExtendedState {
  std::vector<double> base;
  double s = 0.0;
  double c = 1.0;
};

/// s' = s + c r, c' = gamma c.
ExtendedState extend_step(const ExtendedState& prev, double reward, double gamma,
                          std::vector<double> next_base);

struct ActionSpace {
  bool discrete = false;
  std::size_t n = 0;  // number of actions (discrete) or action dimension (continuous)
  std::vector<double> low;
  std::vector<double> high;

  std::size_t dim() const { return discrete ? 1 : n; }
};

struct StepResult {
  double reward = 0.0;
  std::vector<double> observation;
  bool done = false;
};

/// Single-owner stateful environment. Discrete actions are passed as a
/// one-element vector holding the action index.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::string name() const = 0;
  virtual std::size_t observation_dim() const = 0;
  virtual ActionSpace action_space() const = 0;
  virtual std::size_t horizon() const = 0;
  virtual std::vector<double> reset(Rng& rng) = 0;
  virtual StepResult step(std::span<const double> action, Rng& rng) = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
};

struct ExtendedStep {
  double reward = 0.0;
  ExtendedState next;
  bool done = false;
};

/// Tracks (s, c) alongside any Environment.
class ExtendedEnvironment {
 public:
  ExtendedEnvironment(std::unique_ptr<Environment> env, double gamma);

  const Environment& base() const { return *env_; }
  double gamma() const { return gamma_; }
  const ExtendedState& state() const { return state_; }

  const ExtendedState& reset(Rng& rng);
  ExtendedStep step(std::span<const double> action, Rng& rng);

 private:
  std::unique_ptr<Environment> env_;
  double gamma_;
  ExtendedState state_;
};

// ---------------------------------------------------------------------------
// Mean-reverting trading

struct TradingParams {
  double zeta = 1.0;      // long-term mean
  double kappa = 2.0;     // reversion speed
  double sigma = 1.0;     // volatility
  double trade_cost = 0.005;
  double psi = 0.5;       // terminal inventory penalty
  double a_max = 1.0;
  double q_max = 5.0;
  std::size_t horizon = 50;
  double dt = 0.02;
  double initial_price = 1.0;
};

/// Exact OU transition over one step of length dt.
double ou_step(const TradingParams& params, double price, double noise);

/// -a P - cost a^2, plus q_T P_T - psi q_T^2 on the terminal step.
double trading_reward(const TradingParams& params, double price, double action, bool terminal,
                      double inventory_after, double terminal_price);

/// Observation (price, inventory, remaining-time fraction); one continuous action.
class TradingEnv final : public Environment {
 public:
  explicit TradingEnv(TradingParams params = {});

  const TradingParams& params() const { return params_; }
  double price() const { return price_; }
  double inventory() const { return inventory_; }

  std::string name() const override { return "trading"; }
  std::size_t observation_dim() const override { return 3; }
  ActionSpace action_space() const override;
  std::size_t horizon() const override { return params_.horizon; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::span<const double> action, Rng& rng) override;
  std::unique_ptr<Environment> clone() const override;

 private:
  std::vector<double> observe() const;

  TradingParams params_;
  double price_ = 1.0;
  double inventory_ = 0.0;
  std::size_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Portfolio allocation over a CSV of daily log-returns

struct ReturnSeries {
  std::vector<std::string> assets;
  std::vector<std::string> dates;
  std::vector<std::vector<double>> rows;  // rows[t][asset]

  std::size_t size() const { return rows.size(); }
};

/// Header `date,asset1,...`; each row an ISO date and one log-return per asset.
ReturnSeries load_return_series(const std::string& path);
/// Chronological split: first `fraction` of rows, or the remainder when `train` is false.
ReturnSeries split_series(const ReturnSeries& series, double fraction, bool train);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::span<const double> v);

struct PortfolioStepResult {
  double reward = 0.0;
  std::vector<double> drifted_weights;
};

/// log(sum w_i e^{r_i}) - cost * sum |w_i - prev_i|, then weights drift with returns.
PortfolioStepResult portfolio_step(std::span<const double> prev_weights,
                                   std::span<const double> weights,
                                   std::span<const double> log_returns, double cost = 0.0025);

struct PortfolioParams {
  std::size_t window = 5;
  std::size_t episode_length = 63;
  double cost = 0.0025;
};

/// Observation: last `window` returns of every asset, then current weights.
class PortfolioEnv final : public Environment {
 public:
  PortfolioEnv(ReturnSeries series, PortfolioParams params = {});

  std::string name() const override { return "portfolio"; }
  std::size_t observation_dim() const override;
  ActionSpace action_space() const override;
  std::size_t horizon() const override { return params_.episode_length; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::span<const double> action, Rng& rng) override;
  std::unique_ptr<Environment> clone() const override;

  /// Starts an episode at a fixed row index (first decision uses rows [start-window, start)).
  std::vector<double> reset_at(std::size_t start);

 private:
  std::vector<double> observe() const;

  ReturnSeries series_;
  PortfolioParams params_;
  std::vector<double> weights_;
  std::size_t start_ = 0;
  std::size_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Finite-horizon tabular MDPs

struct RewardOutcome {
  double value = 0.0;
  double prob = 0.0;
};

/// Rewards and next states are drawn independently given (x, a).
struct TabularMdp {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  double gamma = 0.9;
  std::size_t horizon = 1;
  std::vector<double> xi0;
  std::vector<double> transitions;                 // [x][a][x'] row-major
  std::vector<std::vector<RewardOutcome>> rewards;  // [x * num_actions + a]

  double p(std::size_t x, std::size_t a, std::size_t next) const {
    return transitions[(x * num_actions + a) * num_states + next];
  }
  const std::vector<RewardOutcome>& reward(std::size_t x, std::size_t a) const {
    return rewards[x * num_actions + a];
  }
  double r_min() const;
  double r_max() const;
  double g_min() const { return r_min() / (1.0 - gamma); }
  double g_max() const { return r_max() / (1.0 - gamma); }

  /// Throws InputError on shape errors, unnormalized rows or negative rewards.
  void validate() const;
};

TabularMdp load_tabular_mdp(const std::string& path);
void save_tabular_mdp(const TabularMdp& mdp, const std::string& path);
TabularMdp tabular_mdp_from_json(const std::string& text);
std::string tabular_mdp_to_json(const TabularMdp& mdp);

struct TabularStep {
  double reward = 0.0;
  std::size_t next_state = 0;
  bool done = false;
};

/// One transition from (x, a) at time t; done once t + 1 reaches the horizon.
TabularStep tabular_step(const TabularMdp& mdp, std::size_t state, std::size_t action,
                         std::size_t t, Rng& rng);

/// One state, one action, reward 1, gamma 0.5, horizon 2.
TabularMdp deterministic_fixture();
/// Action 0 pays 0 or 2 with probability 1/2, action 1 pays 0.9; horizon 1.
TabularMdp bandit_fixture();
/// Three states, two actions, horizon 2, gamma 0.9, with stochastic rewards and branching.
TabularMdp chain_fixture();

/// Observation: one-hot state followed by the remaining-time fraction.
class TabularEnv final : public Environment {
 public:
  explicit TabularEnv(TabularMdp mdp);

  const TabularMdp& mdp() const { return mdp_; }
  std::size_t current_state() const { return state_; }

  std::string name() const override { return "tabular"; }
  std::size_t observation_dim() const override { return mdp_.num_states + 1; }
  ActionSpace action_space() const override;
  std::size_t horizon() const override { return mdp_.horizon; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::span<const double> action, Rng& rng) override;
  std::unique_ptr<Environment> clone() const override;

 private:
  std::vector<double> observe() const;

  TabularMdp mdp_;
  std::size_t state_ = 0;
  std::size_t t_ = 0;
};

}  // namespace srm
