#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "srm/agents.hpp"
#include "srm/environments.hpp"
#include "srm/offline_data.hpp"

namespace srm {

struct OnlineOptions {
  std::size_t steps = 50000;          // environment steps
  std::uint64_t seed = 0;             // environment and exploration stream
  std::size_t initial_samples = 16;   // x0 draws pooled by each h refresh
  std::size_t replay_capacity = 1000000;
};

struct OfflineOptions {
  std::size_t steps = 5000;           // gradient updates
  std::uint64_t seed = 0;             // minibatch stream
  std::size_t initial_samples = 64;   // episode starts pooled by each h refresh
};

struct TrainingTrace {
  std::vector<double> episode_returns;  // discounted return of every finished training episode
  std::vector<double> critic_losses;    // mean critic loss per h-refresh interval
  std::size_t updates = 0;
  std::size_t h_refreshes = 0;
};

/// Extended inputs [x0; 0; 1] for `count` initial-state draws.
std::vector<std::vector<double>> initial_inputs(const Environment& env, std::size_t count,
                                                std::uint64_t seed);

/// Uniform random action over the action space.
std::vector<double> random_action(const ActionSpace& space, Rng& rng);

/// Online loop: act, store, update every step after warm-up, refresh h every
/// `h_interval` environment steps. When `replay` is non-null it receives every
/// transition in collection order, forming a replay-style dataset.
TrainingTrace train_online(SrmAgent& agent, const Environment& env, const OnlineOptions& options,
                           TransitionDataset* replay = nullptr);

/// Offline loop over a fixed dataset; h refreshes every `h_interval` updates.
TrainingTrace train_offline(SrmAgent& agent, const TransitionDataset& dataset,
                            const OfflineOptions& options);

/// Worker count: SRM_RL_THREADS when set to a positive integer, else hardware concurrency.
std::size_t worker_threads();

/// Discounted returns of `episodes` rollouts. Episode i uses its own stream derived from
/// (seed, i), so results do not depend on the worker count.
std::vector<double> evaluate_returns(const Environment& env, double gamma, const PolicyFn& policy,
                                     std::size_t episodes, std::uint64_t seed, std::size_t threads = 0);

/// Greedy (mode-action) rollouts of a trained agent.
std::vector<double> evaluate_agent(const SrmAgent& agent, const Environment& env, std::size_t episodes,
                                   std::uint64_t seed, std::size_t threads = 0);

/// Per-step reward paths of greedy rollouts (used for Sharpe and drawdown on portfolios).
std::vector<std::vector<double>> rollout_rewards(const SrmAgent& agent, const Environment& env,
                                                 std::size_t episodes, std::uint64_t seed);

}  // namespace srm
