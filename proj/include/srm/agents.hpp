#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "srm/environments.hpp"
#include "srm/neural.hpp"
#include "srm/risk_functional.hpp"
#include "srm/risk_spectra.hpp"
#include "srm/transition.hpp"

namespace srm {

enum class Algorithm { AcSrm, OacSrm, Td3Srm, Td3BcSrm };
enum class ActorKind { Categorical, Gaussian, Deterministic };

std::string to_string(Algorithm algo);
Algorithm parse_algorithm(const std::string& text);  // ac-srm | oac-srm | td3-srm | td3bc-srm
bool is_offline(Algorithm algo);

struct AgentConfig {
  double lr = 3e-4;
  double gamma = 0.99;
  std::size_t batch_size = 256;
  std::size_t quantiles = 50;
  double nu = 5e-3;                 // polyak rate
  std::size_t policy_delay = 2;
  std::size_t h_interval = 500;     // T_inner: updates between h refreshes
  double kappa = 1.0;               // Huber threshold
  double awac_lambda = 1.0;         // OAC Lagrange multiplier
  double bc_coef = 2.5;             // TD3BC behavior-cloning strength
  double exploration_noise = 0.1;   // action units
  double target_noise = 0.2;
  double noise_clip = 0.5;
  double gaussian_std = 0.1;        // action units
  std::vector<std::size_t> hidden = {256, 256};
  std::size_t warmup_steps = 1000;  // uniform random actions before learning starts (online)
  std::size_t value_samples = 10;   // Monte-Carlo samples of V under Gaussian actors
  double weight_clamp = 100.0;
};

/// Column-major batch assembled from transition records.
struct Batch {
  Matrix input;       // [state; s; c]
  Matrix action;      // raw action values (index for discrete actions)
  Vector reward;
  Matrix next_input;  // [next_state; next_s; next_c]
  Vector done;        // 1 for terminal transitions

  std::size_t size() const { return static_cast<std::size_t>(input.cols()); }
  double s(std::size_t j) const { return input(input.rows() - 2, static_cast<Eigen::Index>(j)); }
  double c(std::size_t j) const { return input(input.rows() - 1, static_cast<Eigen::Index>(j)); }
  double next_s(std::size_t j) const {
    return next_input(next_input.rows() - 2, static_cast<Eigen::Index>(j));
  }
  double next_c(std::size_t j) const {
    return next_input(next_input.rows() - 1, static_cast<Eigen::Index>(j));
  }
};

Batch make_batch(std::span<const TransitionRecord* const> records);
Batch make_batch(std::span<const TransitionRecord> records);

/// Policy head over the extended-state input [observation; s; c].
class Actor {
 public:
  Actor() = default;
  Actor(ActorKind kind, std::size_t input_dim, ActionSpace space,
        const std::vector<std::size_t>& hidden, double gaussian_std, Rng& rng);

  ActorKind kind() const { return kind_; }
  const ActionSpace& space() const { return space_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  double gaussian_std() const { return gaussian_std_; }

  /// Deterministic/Gaussian: squashed mean action (act_dim x B). Categorical: probabilities.
  Matrix forward(const Matrix& input, Mlp::Cache* cache = nullptr, Matrix* raw = nullptr) const;
  /// Mode action for one input.
  std::vector<double> mode(std::span<const double> input) const;
  /// Draws from the policy (categorical/Gaussian) or adds clipped exploration noise (deterministic).
  std::vector<double> sample(std::span<const double> input, double noise_std, Rng& rng) const;

  /// log pi(a | x) for stochastic actors.
  double log_prob(std::span<const double> input, std::span<const double> action) const;
  /// d/d raw output of sum_j weight_j log pi(a_j | x_j); raw is the pre-squash network output.
  Matrix log_prob_raw_grad(const Matrix& raw, const Matrix& actions, const Vector& weights) const;
  /// Chain from d/d squashed action to d/d raw output (deterministic/Gaussian).
  Matrix squash_backward(const Matrix& raw, const Matrix& grad_action) const;

 private:
  ActorKind kind_ = ActorKind::Deterministic;
  ActionSpace space_;
  Mlp net_;
  double gaussian_std_ = 0.1;
};

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_objective = 0.0;
  bool actor_updated = false;
};

/// Twin distributional critics, an actor, their targets, and the current h.
class SrmAgent {
 public:
  SrmAgent(Algorithm algo, AgentConfig config, std::size_t obs_dim, ActionSpace space,
           RiskSpectrum spectrum, std::uint64_t seed);

  Algorithm algorithm() const { return algo_; }
  const AgentConfig& config() const { return config_; }
  const RiskSpectrum& spectrum() const { return spectrum_; }
  const ActionSpace& action_space() const { return space_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t input_dim() const { return obs_dim_ + 2; }
  std::size_t updates() const { return updates_; }
  std::uint64_t seed() const { return seed_; }

  const PiecewiseLinearH& h() const { return h_; }
  void set_h(PiecewiseLinearH h) { h_ = std::move(h); }

  Actor& actor() { return actor_; }
  const Actor& actor() const { return actor_; }
  Mlp& critic(int k) { return critics_[k]; }
  const Mlp& critic(int k) const { return critics_[k]; }
  const Mlp& target_critic(int k) const { return target_critics_[k]; }
  const Actor& target_actor() const { return target_actor_; }

  static std::vector<double> extended_input(const ExtendedState& x);

  /// Exploration action (training) or mode action (evaluation).
  std::vector<double> act(const ExtendedState& x, bool explore, Rng& rng) const;

  /// One critic step; actor and target step every `policy_delay` calls.
  UpdateStats update(const Batch& batch);

  /// Rebuilds h from critic-1 atoms at (x0, mode action) pooled over initial inputs.
  void refresh_h(const std::vector<std::vector<double>>& initial_inputs);

  // Pieces of `update`, exposed for verification.
  Matrix critic_input(const Matrix& input, const Matrix& action) const;
  Matrix critic_targets(const Batch& batch);
  double critic_loss(int k, const Batch& batch, const Matrix& targets, Vector* grad) const;
  /// Advantage A = Q1(x, a) - E_{a' ~ target actor} Q1(x, a') per sample.
  Vector advantages(const Batch& batch);
  /// Per-sample actor weights: A (online) or min(exp(A / lambda), clamp) (offline).
  Vector actor_weights(const Vector& advantages) const;
  /// Scalar the actor ascends and its gradient w.r.t. actor parameters.
  double stochastic_objective(const Batch& batch, const Vector& weights, Vector* grad) const;
  double deterministic_objective(const Batch& batch, Vector* grad) const;

  std::string checkpoint_json() const;
  static SrmAgent from_checkpoint_json(const std::string& text);
  void save_checkpoint(const std::string& path) const;
  static SrmAgent load_checkpoint(const std::string& path);

 private:
  void soft_update_targets();
  Matrix encode_actions(const Matrix& action) const;

  Algorithm algo_;
  AgentConfig config_;
  std::size_t obs_dim_;
  ActionSpace space_;
  RiskSpectrum spectrum_;
  std::uint64_t seed_;
  Rng rng_;

  Actor actor_;
  Actor target_actor_;
  Mlp critics_[2];
  Mlp target_critics_[2];
  AdamState actor_opt_;
  AdamState critic_opt_[2];
  PiecewiseLinearH h_;
  std::size_t updates_ = 0;
};

ActorKind actor_kind_for(Algorithm algo, const ActionSpace& space);

/// a' = clip(a + clip(eps, -noise_clip, noise_clip)), eps ~ N(0, sigma) per dimension.
std::vector<double> target_policy_smoothing(std::span<const double> action, double sigma,
                                            double noise_clip, const ActionSpace& space, Rng& rng);

}  // namespace srm
