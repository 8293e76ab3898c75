#include "srm/training.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

#include "srm/errors.hpp"

namespace srm {

std::vector<std::vector<double>> initial_inputs(const Environment& env, std::size_t count,
                                                std::uint64_t seed) {
  auto e = env.clone();
  Rng rng(seed);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(SrmAgent::extended_input({e->reset(rng), 0.0, 1.0}));
  return out;
}

std::vector<double> random_action(const ActionSpace& space, Rng& rng) {
  if (space.discrete) {
    std::uniform_int_distribution<std::size_t> pick(0, space.n - 1);
    return {static_cast<double>(pick(rng))};
  }
  std::vector<double> a(space.n);
  for (std::size_t d = 0; d < space.n; ++d) {
    a[d] = std::uniform_real_distribution<double>(space.low[d], space.high[d])(rng);
  }
  return a;
}

TrainingTrace train_online(SrmAgent& agent, const Environment& env, const OnlineOptions& options,
                           TransitionDataset* replay) {
  const AgentConfig& cfg = agent.config();
  if (env.observation_dim() != agent.obs_dim()) {
    throw InputError("train_online: environment observation dim " + std::to_string(env.observation_dim()) +
                     " differs from agent " + std::to_string(agent.obs_dim()));
  }
  const ActionSpace space = env.action_space();
  ExtendedEnvironment ext(env.clone(), cfg.gamma);
  Rng rng(options.seed);
  const auto x0 = initial_inputs(env, std::max<std::size_t>(1, options.initial_samples), options.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t capacity = std::max<std::size_t>(1, options.replay_capacity);

  std::vector<TransitionRecord> buffer;
  buffer.reserve(std::min(capacity, options.steps));
  std::size_t head = 0;
  if (replay) {
    replay->meta = {env.name(), cfg.gamma, env.observation_dim(), space.dim(), "replay:" + to_string(agent.algorithm()),
                    options.seed, 0};
    replay->records.clear();
    replay->records.reserve(options.steps);
  }

  TrainingTrace trace;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  auto refresh = [&] {
    agent.refresh_h(x0);
    ++trace.h_refreshes;
    if (loss_count > 0) trace.critic_losses.push_back(loss_sum / static_cast<double>(loss_count));
    loss_sum = 0.0;
    loss_count = 0;
  };
  refresh();

  std::size_t episode = 0;
  std::size_t t = 0;
  ExtendedState x = ext.reset(rng);
  std::vector<const TransitionRecord*> picks(cfg.batch_size);
  for (std::size_t step = 0; step < options.steps; ++step) {
    std::vector<double> action =
        step < cfg.warmup_steps ? random_action(space, rng) : agent.act(x, true, rng);
    ExtendedStep out = ext.step(action, rng);
    const bool last_step = step + 1 == options.steps;
    TransitionRecord r{episode, t, x.base, x.s, x.c, std::move(action), out.reward,
                       out.next.base, out.next.s, out.next.c, out.done};
    if (replay) {
      replay->records.push_back(r);
      if (last_step) replay->records.back().done = true;
    }
    if (buffer.size() < capacity) {
      buffer.push_back(std::move(r));
    } else {
      buffer[head] = std::move(r);
      head = (head + 1) % capacity;
    }
    if (out.done) {
      trace.episode_returns.push_back(out.next.s);
      x = ext.reset(rng);
      ++episode;
      t = 0;
    } else {
      x = std::move(out.next);
      ++t;
    }

    if (step + 1 >= cfg.warmup_steps && buffer.size() >= cfg.batch_size) {
      std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
      for (auto& p : picks) p = &buffer[pick(rng)];
      const UpdateStats stats = agent.update(make_batch(std::span<const TransitionRecord* const>(picks)));
      loss_sum += stats.critic_loss;
      ++loss_count;
      ++trace.updates;
    }
    if ((step + 1) % cfg.h_interval == 0) refresh();
  }
  if (replay) replay->meta.records = replay->records.size();
  return trace;
}

TrainingTrace train_offline(SrmAgent& agent, const TransitionDataset& dataset, const OfflineOptions& options) {
  if (dataset.empty()) throw InputError("train_offline: dataset is empty");
  if (dataset.meta.state_dim != agent.obs_dim() || dataset.meta.action_dim != agent.action_space().dim()) {
    throw InputError("train_offline: dataset dims (state " + std::to_string(dataset.meta.state_dim) + ", action " +
                     std::to_string(dataset.meta.action_dim) + ") do not match the agent");
  }
  std::vector<std::vector<double>> x0;
  for (const TransitionRecord& r : dataset.records) {
    if (r.t != 0) continue;
    x0.push_back(SrmAgent::extended_input({r.state, 0.0, 1.0}));
    if (x0.size() >= options.initial_samples) break;
  }
  if (x0.empty()) throw InputError("train_offline: dataset holds no episode start (t = 0)");

  TrainingTrace trace;
  const std::size_t interval = agent.config().h_interval;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  auto refresh = [&] {
    agent.refresh_h(x0);
    ++trace.h_refreshes;
    if (loss_count > 0) trace.critic_losses.push_back(loss_sum / static_cast<double>(loss_count));
    loss_sum = 0.0;
    loss_count = 0;
  };
  refresh();
  Rng rng(options.seed);
  for (std::size_t k = 0; k < options.steps; ++k) {
    const auto picks = sample_batch(dataset, agent.config().batch_size, rng);
    const UpdateStats stats = agent.update(make_batch(std::span<const TransitionRecord* const>(picks)));
    loss_sum += stats.critic_loss;
    ++loss_count;
    ++trace.updates;
    if ((k + 1) % interval == 0) refresh();
  }
  return trace;
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("SRM_RL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

Rng episode_stream(std::uint64_t seed, std::size_t episode) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(episode >> 32)};
  return Rng(seq);
}

}  // namespace

std::vector<double> evaluate_returns(const Environment& env, double gamma, const PolicyFn& policy,
                                     std::size_t episodes, std::uint64_t seed, std::size_t threads) {
  std::vector<double> out(episodes, 0.0);
  const std::size_t workers = std::clamp<std::size_t>(threads == 0 ? worker_threads() : threads, 1,
                                                      std::max<std::size_t>(1, episodes));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    ExtendedEnvironment ext(env.clone(), gamma);
    for (std::size_t i = next++; i < episodes; i = next++) {
      Rng rng = episode_stream(seed, i);
      ExtendedState x = ext.reset(rng);
      for (;;) {
        ExtendedStep step = ext.step(policy(x, rng), rng);
        if (step.done) {
          out[i] = step.next.s;
          break;
        }
        x = std::move(step.next);
      }
    }
  };
  if (workers == 1) {
    work();
    return out;
  }
  {
    std::vector<std::jthread> pool;  // joins on scope exit
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return out;
}

std::vector<double> evaluate_agent(const SrmAgent& agent, const Environment& env, std::size_t episodes,
                                   std::uint64_t seed, std::size_t threads) {
  const PolicyFn greedy = [&agent](const ExtendedState& x, Rng& rng) { return agent.act(x, false, rng); };
  return evaluate_returns(env, agent.config().gamma, greedy, episodes, seed, threads);
}

std::vector<std::vector<double>> rollout_rewards(const SrmAgent& agent, const Environment& env,
                                                 std::size_t episodes, std::uint64_t seed) {
  std::vector<std::vector<double>> out;
  ExtendedEnvironment ext(env.clone(), agent.config().gamma);
  for (std::size_t i = 0; i < episodes; ++i) {
    Rng rng = episode_stream(seed, i);
    ExtendedState x = ext.reset(rng);
    std::vector<double> rewards;
    for (;;) {
      ExtendedStep step = ext.step(agent.act(x, false, rng), rng);
      rewards.push_back(step.reward);
      if (step.done) break;
      x = std::move(step.next);
    }
    out.push_back(std::move(rewards));
  }
  return out;
}

}  // namespace srm
