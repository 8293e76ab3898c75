#include "srm/agents.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "srm/errors.hpp"

namespace srm {

using nlohmann::json;

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::AcSrm: return "ac-srm";
    case Algorithm::OacSrm: return "oac-srm";
    case Algorithm::Td3Srm: return "td3-srm";
    case Algorithm::Td3BcSrm: return "td3bc-srm";
  }
  return "ac-srm";
}

Algorithm parse_algorithm(const std::string& text) {
  if (text == "ac-srm") return Algorithm::AcSrm;
  if (text == "oac-srm") return Algorithm::OacSrm;
  if (text == "td3-srm") return Algorithm::Td3Srm;
  if (text == "td3bc-srm") return Algorithm::Td3BcSrm;
  throw ParameterError("unknown algorithm '" + text + "' (ac-srm, oac-srm, td3-srm, td3bc-srm)");
}

bool is_offline(Algorithm algo) { return algo == Algorithm::OacSrm || algo == Algorithm::Td3BcSrm; }

ActorKind actor_kind_for(Algorithm algo, const ActionSpace& space) {
  const bool deterministic = algo == Algorithm::Td3Srm || algo == Algorithm::Td3BcSrm;
  if (deterministic) {
    if (space.discrete) throw ParameterError(to_string(algo) + " needs a continuous action space");
    return ActorKind::Deterministic;
  }
  return space.discrete ? ActorKind::Categorical : ActorKind::Gaussian;
}

std::vector<double> target_policy_smoothing(std::span<const double> action, double sigma,
                                            double noise_clip, const ActionSpace& space, Rng& rng) {
  std::vector<double> out(action.begin(), action.end());
  if (sigma <= 0.0) {
    for (std::size_t d = 0; d < out.size(); ++d) out[d] = std::clamp(out[d], space.low[d], space.high[d]);
    return out;
  }
  std::normal_distribution<double> normal(0.0, sigma);
  for (std::size_t d = 0; d < out.size(); ++d) {
    const double eps = std::clamp(normal(rng), -noise_clip, noise_clip);
    out[d] = std::clamp(out[d] + eps, space.low[d], space.high[d]);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

template <class Get>
Batch assemble(std::size_t count, Get get) {
  if (count == 0) throw InputError("make_batch: empty record set");
  const TransitionRecord& first = get(0);
  const auto sd = static_cast<Eigen::Index>(first.state.size());
  const auto ad = static_cast<Eigen::Index>(first.action.size());
  const auto b = static_cast<Eigen::Index>(count);
  Batch batch;
  batch.input.resize(sd + 2, b);
  batch.next_input.resize(sd + 2, b);
  batch.action.resize(ad, b);
  batch.reward.resize(b);
  batch.done.resize(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const TransitionRecord& r = get(static_cast<std::size_t>(j));
    if (static_cast<Eigen::Index>(r.state.size()) != sd ||
        static_cast<Eigen::Index>(r.next_state.size()) != sd ||
        static_cast<Eigen::Index>(r.action.size()) != ad) {
      throw InternalError("make_batch: record dimensions differ within the batch");
    }
    for (Eigen::Index i = 0; i < sd; ++i) {
      batch.input(i, j) = r.state[i];
      batch.next_input(i, j) = r.next_state[i];
    }
    batch.input(sd, j) = r.s;
    batch.input(sd + 1, j) = r.c;
    batch.next_input(sd, j) = r.next_s;
    batch.next_input(sd + 1, j) = r.next_c;
    for (Eigen::Index i = 0; i < ad; ++i) batch.action(i, j) = r.action[i];
    batch.reward[j] = r.reward;
    batch.done[j] = r.done ? 1.0 : 0.0;
  }
  return batch;
}

std::span<const double> column(const Matrix& m, Eigen::Index j) {
  return {m.data() + j * m.rows(), static_cast<std::size_t>(m.rows())};
}

std::span<double> column(Matrix& m, Eigen::Index j) {
  return {m.data() + j * m.rows(), static_cast<std::size_t>(m.rows())};
}

double half_range(const ActionSpace& space, std::size_t d) { return 0.5 * (space.high[d] - space.low[d]); }
double mid_range(const ActionSpace& space, std::size_t d) { return 0.5 * (space.high[d] + space.low[d]); }

std::size_t action_index(double a, std::size_t n) {
  const long long k = std::llround(a);
  if (k < 0 || static_cast<std::size_t>(k) >= n) throw InternalError("discrete action index out of range");
  return static_cast<std::size_t>(k);
}

}  // namespace

Batch make_batch(std::span<const TransitionRecord* const> records) {
  return assemble(records.size(), [&](std::size_t j) -> const TransitionRecord& { return *records[j]; });
}

Batch make_batch(std::span<const TransitionRecord> records) {
  return assemble(records.size(), [&](std::size_t j) -> const TransitionRecord& { return records[j]; });
}

// ---------------------------------------------------------------------------

Actor::Actor(ActorKind kind, std::size_t input_dim, ActionSpace space,
             const std::vector<std::size_t>& hidden, double gaussian_std, Rng& rng)
    : kind_(kind), space_(std::move(space)), gaussian_std_(gaussian_std) {
  if (kind_ == ActorKind::Categorical && !space_.discrete) {
    throw ParameterError("categorical actor needs a discrete action space");
  }
  if (kind_ != ActorKind::Categorical && space_.discrete) {
    throw ParameterError("continuous actor needs a continuous action space");
  }
  if (kind_ == ActorKind::Gaussian && !(gaussian_std_ > 0.0)) {
    throw ParameterError("gaussian actor needs a positive standard deviation");
  }
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(space_.n);
  net_ = Mlp(dims, rng);
}

Matrix Actor::forward(const Matrix& input, Mlp::Cache* cache, Matrix* raw) const {
  Matrix out = net_.forward(input, cache);
  if (raw) *raw = out;
  if (kind_ == ActorKind::Categorical) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const double m = out.col(j).maxCoeff();
      out.col(j) = (out.col(j).array() - m).exp().matrix();
      out.col(j) /= out.col(j).sum();
    }
    return out;
  }
  for (Eigen::Index d = 0; d < out.rows(); ++d) {
    const auto du = static_cast<std::size_t>(d);
    out.row(d) = (mid_range(space_, du) + half_range(space_, du) * out.row(d).array().tanh()).matrix();
  }
  return out;
}

std::vector<double> Actor::mode(std::span<const double> input) const {
  const Matrix x = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  const Matrix out = forward(x);
  if (kind_ == ActorKind::Categorical) {
    Eigen::Index best = 0;
    out.col(0).maxCoeff(&best);
    return {static_cast<double>(best)};
  }
  return {out.data(), out.data() + out.rows()};
}

std::vector<double> Actor::sample(std::span<const double> input, double noise_std, Rng& rng) const {
  const Matrix x = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  const Matrix out = forward(x);
  if (kind_ == ActorKind::Categorical) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    for (Eigen::Index k = 0; k < out.rows(); ++k) {
      if (u < out(k, 0)) return {static_cast<double>(k)};
      u -= out(k, 0);
    }
    return {static_cast<double>(out.rows() - 1)};
  }
  const double sd = kind_ == ActorKind::Gaussian ? gaussian_std_ : noise_std;
  std::vector<double> a(out.data(), out.data() + out.rows());
  if (sd > 0.0) {
    std::normal_distribution<double> normal(0.0, sd);
    for (std::size_t d = 0; d < a.size(); ++d) a[d] = std::clamp(a[d] + normal(rng), space_.low[d], space_.high[d]);
  }
  return a;
}

double Actor::log_prob(std::span<const double> input, std::span<const double> action) const {
  const Matrix x = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  const Matrix out = forward(x);
  if (kind_ == ActorKind::Categorical) return std::log(out(static_cast<Eigen::Index>(action_index(action[0], space_.n)), 0));
  if (kind_ != ActorKind::Gaussian) throw InternalError("log_prob: deterministic actor has no density");
  const double var = gaussian_std_ * gaussian_std_;
  double lp = 0.0;
  for (Eigen::Index d = 0; d < out.rows(); ++d) {
    const double u = action[static_cast<std::size_t>(d)] - out(d, 0);
    lp += -0.5 * u * u / var - std::log(gaussian_std_) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return lp;
}

Matrix Actor::log_prob_raw_grad(const Matrix& raw, const Matrix& actions, const Vector& weights) const {
  Matrix g = Matrix::Zero(raw.rows(), raw.cols());
  if (kind_ == ActorKind::Categorical) {
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      const double m = raw.col(j).maxCoeff();
      Vector p = (raw.col(j).array() - m).exp().matrix();
      p /= p.sum();
      g.col(j) = -weights[j] * p;
      g(static_cast<Eigen::Index>(action_index(actions(0, j), space_.n)), j) += weights[j];
    }
    return g;
  }
  if (kind_ != ActorKind::Gaussian) throw InternalError("log_prob_raw_grad: deterministic actor");
  const double var = gaussian_std_ * gaussian_std_;
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    for (Eigen::Index d = 0; d < raw.rows(); ++d) {
      const auto du = static_cast<std::size_t>(d);
      const double t = std::tanh(raw(d, j));
      const double mean = mid_range(space_, du) + half_range(space_, du) * t;
      g(d, j) = weights[j] * (actions(d, j) - mean) / var * half_range(space_, du) * (1.0 - t * t);
    }
  }
  return g;
}

Matrix Actor::squash_backward(const Matrix& raw, const Matrix& grad_action) const {
  Matrix g(raw.rows(), raw.cols());
  for (Eigen::Index d = 0; d < raw.rows(); ++d) {
    const double half = half_range(space_, static_cast<std::size_t>(d));
    g.row(d) = (grad_action.row(d).array() * half * (1.0 - raw.row(d).array().tanh().square())).matrix();
  }
  return g;
}

// ---------------------------------------------------------------------------

SrmAgent::SrmAgent(Algorithm algo, AgentConfig config, std::size_t obs_dim, ActionSpace space,
                   RiskSpectrum spectrum, std::uint64_t seed)
    : algo_(algo),
      config_(std::move(config)),
      obs_dim_(obs_dim),
      space_(std::move(space)),
      spectrum_(spectrum),
      seed_(seed),
      rng_(seed) {
  if (!(config_.gamma >= 0.0 && config_.gamma < 1.0)) throw ParameterError("agent: gamma must lie in [0, 1)");
  if (config_.quantiles == 0) throw ParameterError("agent: quantile count must be positive");
  if (config_.batch_size == 0) throw ParameterError("agent: batch size must be positive");
  if (config_.policy_delay == 0) throw ParameterError("agent: policy delay must be positive");
  if (!(config_.nu > 0.0 && config_.nu <= 1.0)) throw ParameterError("agent: nu must lie in (0, 1]");
  if (!(config_.kappa > 0.0)) throw ParameterError("agent: kappa must be positive");
  if (!(config_.awac_lambda > 0.0)) throw ParameterError("agent: lambda must be positive");
  if (space_.low.size() != space_.dim() || space_.high.size() != space_.dim()) {
    throw ParameterError("agent: action bounds do not match the action dimension");
  }
  const ActorKind kind = actor_kind_for(algo_, space_);
  actor_ = Actor(kind, input_dim(), space_, config_.hidden, config_.gaussian_std, rng_);
  target_actor_ = actor_;
  // Discrete actions enter the critic one-hot, continuous ones raw; both occupy n rows.
  std::vector<std::size_t> dims{input_dim() + space_.n};
  dims.insert(dims.end(), config_.hidden.begin(), config_.hidden.end());
  dims.push_back(config_.quantiles);
  for (int k = 0; k < 2; ++k) {
    critics_[k] = Mlp(dims, rng_);
    target_critics_[k] = critics_[k];
  }
}

std::vector<double> SrmAgent::extended_input(const ExtendedState& x) {
  std::vector<double> in = x.base;
  in.push_back(x.s);
  in.push_back(x.c);
  return in;
}

std::vector<double> SrmAgent::act(const ExtendedState& x, bool explore, Rng& rng) const {
  const std::vector<double> in = extended_input(x);
  return explore ? actor_.sample(in, config_.exploration_noise, rng) : actor_.mode(in);
}

Matrix SrmAgent::encode_actions(const Matrix& action) const {
  if (!space_.discrete) return action;
  Matrix enc = Matrix::Zero(static_cast<Eigen::Index>(space_.n), action.cols());
  for (Eigen::Index j = 0; j < action.cols(); ++j) {
    enc(static_cast<Eigen::Index>(action_index(action(0, j), space_.n)), j) = 1.0;
  }
  return enc;
}

Matrix SrmAgent::critic_input(const Matrix& input, const Matrix& action) const {
  const Matrix enc = encode_actions(action);
  if (enc.cols() != input.cols()) throw InternalError("critic_input: batch size mismatch");
  Matrix out(input.rows() + enc.rows(), input.cols());
  out.topRows(input.rows()) = input;
  out.bottomRows(enc.rows()) = enc;
  return out;
}

Matrix SrmAgent::critic_targets(const Batch& batch) {
  const auto b = static_cast<Eigen::Index>(batch.size());
  const Matrix policy_out = target_actor_.forward(batch.next_input);
  Matrix next_action(static_cast<Eigen::Index>(space_.dim()), b);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index j = 0; j < b; ++j) {
    switch (target_actor_.kind()) {
      case ActorKind::Categorical: {
        double u = unif(rng_);
        Eigen::Index k = 0;
        for (; k + 1 < policy_out.rows(); ++k) {
          if (u < policy_out(k, j)) break;
          u -= policy_out(k, j);
        }
        next_action(0, j) = static_cast<double>(k);
        break;
      }
      case ActorKind::Gaussian:
        for (Eigen::Index d = 0; d < next_action.rows(); ++d) {
          const auto du = static_cast<std::size_t>(d);
          next_action(d, j) = std::clamp(policy_out(d, j) + config_.gaussian_std * normal(rng_),
                                         space_.low[du], space_.high[du]);
        }
        break;
      case ActorKind::Deterministic: {
        const auto smoothed = target_policy_smoothing(column(policy_out, j), config_.target_noise,
                                                      config_.noise_clip, space_, rng_);
        for (Eigen::Index d = 0; d < next_action.rows(); ++d) next_action(d, j) = smoothed[static_cast<std::size_t>(d)];
        break;
      }
    }
  }
  const Matrix cin = critic_input(batch.next_input, next_action);
  const Matrix z1 = target_critics_[0].forward(cin);
  const Matrix z2 = target_critics_[1].forward(cin);
  Matrix targets(z1.rows(), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const double r = batch.reward[j];
    if (batch.done[j] > 0.5) {
      targets.col(j).setConstant(r);
      continue;
    }
    const double s2 = batch.next_s(static_cast<std::size_t>(j));
    const double c2 = batch.next_c(static_cast<std::size_t>(j));
    bool first = true;
    if (c2 > 0.0) {
      first = q_value(h_, s2, c2, column(z1, j)) <= q_value(h_, s2, c2, column(z2, j));
    }
    targets.col(j) = (r + config_.gamma * (first ? z1.col(j) : z2.col(j)).array()).matrix();
  }
  return targets;
}

double SrmAgent::critic_loss(int k, const Batch& batch, const Matrix& targets, Vector* grad) const {
  Mlp::Cache cache;
  const Matrix pred = critics_[k].forward(critic_input(batch.input, batch.action), &cache);
  if (pred.rows() != targets.rows() || pred.cols() != targets.cols()) {
    throw InternalError("critic_loss: target shape mismatch");
  }
  Matrix g(pred.rows(), pred.cols());
  double loss = 0.0;
  for (Eigen::Index j = 0; j < pred.cols(); ++j) {
    loss += huber_quantile_loss_into(column(pred, j), column(targets, j), config_.kappa, column(g, j));
  }
  const double inv_b = 1.0 / static_cast<double>(pred.cols());
  if (grad) {
    *grad = Vector::Zero(static_cast<Eigen::Index>(critics_[k].num_params()));
    critics_[k].backward(cache, g * inv_b, grad);
  }
  return loss * inv_b;
}

Vector SrmAgent::advantages(const Batch& batch) {
  const auto b = static_cast<Eigen::Index>(batch.size());
  auto q_of = [&](const Matrix& actions) {
    const Matrix atoms = critics_[0].forward(critic_input(batch.input, actions));
    Vector q(b);
    for (Eigen::Index j = 0; j < b; ++j) {
      q[j] = q_value(h_, batch.s(static_cast<std::size_t>(j)), batch.c(static_cast<std::size_t>(j)),
                     column(atoms, j));
    }
    return q;
  };
  const Vector q = q_of(batch.action);
  Vector v = Vector::Zero(b);
  const Matrix policy_out = target_actor_.forward(batch.input);
  if (target_actor_.kind() == ActorKind::Categorical) {
    for (std::size_t k = 0; k < space_.n; ++k) {
      const Matrix a = Matrix::Constant(1, b, static_cast<double>(k));
      v += policy_out.row(static_cast<Eigen::Index>(k)).transpose().cwiseProduct(q_of(a));
    }
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t samples = std::max<std::size_t>(1, config_.value_samples);
    for (std::size_t m = 0; m < samples; ++m) {
      Matrix a(policy_out.rows(), b);
      for (Eigen::Index j = 0; j < b; ++j) {
        for (Eigen::Index d = 0; d < a.rows(); ++d) {
          const auto du = static_cast<std::size_t>(d);
          a(d, j) = std::clamp(policy_out(d, j) + config_.gaussian_std * normal(rng_), space_.low[du],
                               space_.high[du]);
        }
      }
      v += q_of(a) / static_cast<double>(samples);
    }
  }
  return q - v;
}

Vector SrmAgent::actor_weights(const Vector& adv) const {
  if (!is_offline(algo_)) return adv;
  Vector w(adv.size());
  for (Eigen::Index j = 0; j < adv.size(); ++j) {
    w[j] = std::min(std::exp(adv[j] / config_.awac_lambda), config_.weight_clamp);
  }
  return w;
}

double SrmAgent::stochastic_objective(const Batch& batch, const Vector& weights, Vector* grad) const {
  Mlp::Cache cache;
  Matrix raw;
  const Matrix out = actor_.forward(batch.input, &cache, &raw);
  const auto b = static_cast<Eigen::Index>(batch.size());
  double obj = 0.0;
  const double var = actor_.gaussian_std() * actor_.gaussian_std();
  for (Eigen::Index j = 0; j < b; ++j) {
    double lp = 0.0;
    if (actor_.kind() == ActorKind::Categorical) {
      lp = std::log(out(static_cast<Eigen::Index>(action_index(batch.action(0, j), space_.n)), j));
    } else {
      for (Eigen::Index d = 0; d < out.rows(); ++d) {
        const double u = batch.action(d, j) - out(d, j);
        lp += -0.5 * u * u / var - std::log(actor_.gaussian_std()) - 0.5 * std::log(2.0 * std::numbers::pi);
      }
    }
    obj += weights[j] * lp;
  }
  const double inv_b = 1.0 / static_cast<double>(b);
  if (grad) {
    *grad = Vector::Zero(static_cast<Eigen::Index>(actor_.net().num_params()));
    actor_.net().backward(cache, actor_.log_prob_raw_grad(raw, batch.action, weights) * inv_b, grad);
  }
  return obj * inv_b;
}

double SrmAgent::deterministic_objective(const Batch& batch, Vector* grad) const {
  Mlp::Cache actor_cache;
  Mlp::Cache critic_cache;
  Matrix raw;
  const Matrix action = actor_.forward(batch.input, &actor_cache, &raw);
  const Matrix atoms = critics_[0].forward(critic_input(batch.input, action), &critic_cache);
  const auto b = static_cast<Eigen::Index>(batch.size());
  const double inv_b = 1.0 / static_cast<double>(b);
  const bool bc = algo_ == Algorithm::Td3BcSrm;
  Matrix g_atoms(atoms.rows(), b);
  double obj = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) {
    obj += q_value_with_grad(h_, batch.s(static_cast<std::size_t>(j)), batch.c(static_cast<std::size_t>(j)),
                             column(atoms, j), column(g_atoms, j));
  }
  if (bc) obj -= 0.5 * config_.bc_coef * (action - batch.action).squaredNorm();
  obj *= inv_b;
  if (grad) {
    Matrix g_in;
    critics_[0].backward(critic_cache, g_atoms * inv_b, nullptr, &g_in);
    Matrix g_action = g_in.bottomRows(action.rows());
    if (bc) g_action -= config_.bc_coef * inv_b * (action - batch.action);
    *grad = Vector::Zero(static_cast<Eigen::Index>(actor_.net().num_params()));
    actor_.net().backward(actor_cache, actor_.squash_backward(raw, g_action), grad);
  }
  return obj;
}

void SrmAgent::soft_update_targets() {
  polyak_update(target_actor_.net().params(), actor_.net().params(), config_.nu);
  for (int k = 0; k < 2; ++k) polyak_update(target_critics_[k].params(), critics_[k].params(), config_.nu);
}

UpdateStats SrmAgent::update(const Batch& batch) {
  UpdateStats stats;
  const Matrix targets = critic_targets(batch);
  for (int k = 0; k < 2; ++k) {
    Vector grad;
    stats.critic_loss += 0.5 * critic_loss(k, batch, targets, &grad);
    adam_step(critics_[k].params(), grad, critic_opt_[k], config_.lr);
  }
  if (!std::isfinite(stats.critic_loss)) {
    throw InstabilityError("critic loss became non-finite at update " + std::to_string(updates_));
  }
  ++updates_;
  if (updates_ % config_.policy_delay != 0) return stats;
  Vector grad;
  if (actor_.kind() == ActorKind::Deterministic) {
    stats.actor_objective = deterministic_objective(batch, &grad);
  } else {
    const Vector w = actor_weights(advantages(batch));
    stats.actor_objective = stochastic_objective(batch, w, &grad);
  }
  if (!grad.allFinite()) throw InstabilityError("actor gradient became non-finite at update " + std::to_string(updates_));
  adam_step(actor_.net().params(), -grad, actor_opt_, config_.lr);
  soft_update_targets();
  stats.actor_updated = true;
  return stats;
}

void SrmAgent::refresh_h(const std::vector<std::vector<double>>& initial_inputs) {
  if (initial_inputs.empty()) throw InputError("refresh_h: no initial states");
  std::vector<double> pooled;
  pooled.reserve(initial_inputs.size() * config_.quantiles);
  for (const auto& in : initial_inputs) {
    const std::vector<double> a = actor_.mode(in);
    Matrix x(static_cast<Eigen::Index>(in.size()), 1);
    for (std::size_t i = 0; i < in.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = in[i];
    Matrix am(static_cast<Eigen::Index>(a.size()), 1);
    for (std::size_t i = 0; i < a.size(); ++i) am(static_cast<Eigen::Index>(i), 0) = a[i];
    const Matrix atoms = critics_[0].forward(critic_input(x, am));
    pooled.insert(pooled.end(), atoms.data(), atoms.data() + atoms.rows());
  }
  h_ = build_h(spectrum_, empirical_quantiles(pooled, config_.quantiles));
}

// ---------------------------------------------------------------------------

namespace {

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const json& j, Eigen::Index expected, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != expected) {
    throw InputError(std::string("checkpoint: ") + what + " has " + std::to_string(v.size()) +
                     " values, expected " + std::to_string(expected));
  }
  return Eigen::Map<const Vector>(v.data(), expected);
}

json adam_json(const AdamState& s) {
  return {{"m", vec_json(s.m)}, {"v", vec_json(s.v)}, {"t", s.t}};
}

AdamState json_adam(const json& j, Eigen::Index n) {
  AdamState s;
  s.t = j.at("t").get<long long>();
  if (s.t > 0) {
    s.m = json_vec(j.at("m"), n, "optimizer m");
    s.v = json_vec(j.at("v"), n, "optimizer v");
  }
  return s;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

std::string SrmAgent::checkpoint_json() const {
  json j;
  j["format"] = "srm-agent";
  j["version"] = kCheckpointVersion;
  j["algorithm"] = to_string(algo_);
  j["spectrum"] = spectrum_.to_string();
  j["seed"] = seed_;
  j["obs_dim"] = obs_dim_;
  j["action_space"] = {{"discrete", space_.discrete}, {"n", space_.n}, {"low", space_.low}, {"high", space_.high}};
  j["config"] = {{"lr", config_.lr},
                 {"gamma", config_.gamma},
                 {"batch_size", config_.batch_size},
                 {"quantiles", config_.quantiles},
                 {"nu", config_.nu},
                 {"policy_delay", config_.policy_delay},
                 {"h_interval", config_.h_interval},
                 {"kappa", config_.kappa},
                 {"awac_lambda", config_.awac_lambda},
                 {"bc_coef", config_.bc_coef},
                 {"exploration_noise", config_.exploration_noise},
                 {"target_noise", config_.target_noise},
                 {"noise_clip", config_.noise_clip},
                 {"gaussian_std", config_.gaussian_std},
                 {"hidden", config_.hidden},
                 {"warmup_steps", config_.warmup_steps},
                 {"value_samples", config_.value_samples},
                 {"weight_clamp", config_.weight_clamp}};
  j["updates"] = updates_;
  std::ostringstream rng_state;
  rng_state << rng_;
  j["rng"] = rng_state.str();
  j["actor"] = vec_json(actor_.net().params());
  j["target_actor"] = vec_json(target_actor_.net().params());
  j["critics"] = {vec_json(critics_[0].params()), vec_json(critics_[1].params())};
  j["target_critics"] = {vec_json(target_critics_[0].params()), vec_json(target_critics_[1].params())};
  j["optimizers"] = {{"actor", adam_json(actor_opt_)},
                     {"critic0", adam_json(critic_opt_[0])},
                     {"critic1", adam_json(critic_opt_[1])}};
  j["h"] = {{"breakpoints", std::vector<double>(h_.breakpoints().begin(), h_.breakpoints().end())},
            {"weights", std::vector<double>(h_.weights().begin(), h_.weights().end())}};
  return j.dump();
}

SrmAgent SrmAgent::from_checkpoint_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
  try {
    if (j.at("format") != "srm-agent") throw InputError("checkpoint: not an agent checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw InputError("checkpoint: unsupported version " + j.at("version").dump());
    }
    const json& c = j.at("config");
    AgentConfig cfg;
    cfg.lr = c.at("lr");
    cfg.gamma = c.at("gamma");
    cfg.batch_size = c.at("batch_size");
    cfg.quantiles = c.at("quantiles");
    cfg.nu = c.at("nu");
    cfg.policy_delay = c.at("policy_delay");
    cfg.h_interval = c.at("h_interval");
    cfg.kappa = c.at("kappa");
    cfg.awac_lambda = c.at("awac_lambda");
    cfg.bc_coef = c.at("bc_coef");
    cfg.exploration_noise = c.at("exploration_noise");
    cfg.target_noise = c.at("target_noise");
    cfg.noise_clip = c.at("noise_clip");
    cfg.gaussian_std = c.at("gaussian_std");
    cfg.hidden = c.at("hidden").get<std::vector<std::size_t>>();
    cfg.warmup_steps = c.at("warmup_steps");
    cfg.value_samples = c.at("value_samples");
    cfg.weight_clamp = c.at("weight_clamp");
    const json& sp = j.at("action_space");
    ActionSpace space{sp.at("discrete"), sp.at("n"), sp.at("low").get<std::vector<double>>(),
                      sp.at("high").get<std::vector<double>>()};
    SrmAgent agent(parse_algorithm(j.at("algorithm")), cfg, j.at("obs_dim"), space,
                   RiskSpectrum::parse(j.at("spectrum").get<std::string>()), j.at("seed"));
    agent.updates_ = j.at("updates");
    std::istringstream rng_state(j.at("rng").get<std::string>());
    rng_state >> agent.rng_;
    auto load = [](Vector& dst, const json& src, const char* what) {
      dst = json_vec(src, dst.size(), what);
    };
    load(agent.actor_.net().params(), j.at("actor"), "actor");
    load(agent.target_actor_.net().params(), j.at("target_actor"), "target actor");
    for (int k = 0; k < 2; ++k) {
      load(agent.critics_[k].params(), j.at("critics").at(k), "critic");
      load(agent.target_critics_[k].params(), j.at("target_critics").at(k), "target critic");
    }
    const json& opt = j.at("optimizers");
    agent.actor_opt_ = json_adam(opt.at("actor"), agent.actor_.net().params().size());
    agent.critic_opt_[0] = json_adam(opt.at("critic0"), agent.critics_[0].params().size());
    agent.critic_opt_[1] = json_adam(opt.at("critic1"), agent.critics_[1].params().size());
    auto bp = j.at("h").at("breakpoints").get<std::vector<double>>();
    auto w = j.at("h").at("weights").get<std::vector<double>>();
    if (!bp.empty()) agent.h_ = PiecewiseLinearH(std::move(bp), std::move(w), agent.spectrum_);
    return agent;
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
}

void SrmAgent::save_checkpoint(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write checkpoint " + path);
  out << checkpoint_json() << '\n';
}

SrmAgent SrmAgent::load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_checkpoint_json(ss.str());
}

}  // namespace srm
