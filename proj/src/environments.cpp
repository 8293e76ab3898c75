#include "srm/environments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "srm/errors.hpp"

namespace srm {

ExtendedState extend_step(const ExtendedState& prev, double reward, double gamma,
                          std::vector<double> next_base) {
  return ExtendedState{std::move(next_base), prev.s + prev.c * reward, gamma * prev.c};
}

ExtendedEnvironment::ExtendedEnvironment(std::unique_ptr<Environment> env, double gamma)
    : env_(std::move(env)), gamma_(gamma) {
  if (!env_) throw InputError("ExtendedEnvironment: null environment");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("ExtendedEnvironment: gamma must lie in [0, 1)");
}

const ExtendedState& ExtendedEnvironment::reset(Rng& rng) {
  state_ = ExtendedState{env_->reset(rng), 0.0, 1.0};
  return state_;
}

ExtendedStep ExtendedEnvironment::step(std::span<const double> action, Rng& rng) {
  StepResult r = env_->step(action, rng);
  state_ = extend_step(state_, r.reward, gamma_, std::move(r.observation));
  return ExtendedStep{r.reward, state_, r.done};
}

// ---------------------------------------------------------------------------

double ou_step(const TradingParams& params, double price, double noise) {
  if (!(params.dt > 0.0)) throw DomainError("ou_step: dt must be positive");
  const double decay = std::exp(-params.kappa * params.dt);
  const double sd = params.sigma * std::sqrt(-std::expm1(-2.0 * params.kappa * params.dt) /
                                             (2.0 * params.kappa));
  return params.zeta + (price - params.zeta) * decay + sd * noise;
}

double trading_reward(const TradingParams& params, double price, double action, bool terminal,
                      double inventory_after, double terminal_price) {
  double r = -action * price - params.trade_cost * action * action;
  if (terminal) {
    r += inventory_after * terminal_price - params.psi * inventory_after * inventory_after;
  }
  return r;
}

TradingEnv::TradingEnv(TradingParams params) : params_(params) {
  if (params_.horizon == 0) throw ParameterError("trading: horizon must be positive");
  if (!(params_.dt > 0.0)) throw ParameterError("trading: dt must be positive");
  if (!(params_.kappa > 0.0)) throw ParameterError("trading: kappa must be positive");
  if (!(params_.a_max > 0.0) || !(params_.q_max > 0.0)) {
    throw ParameterError("trading: a_max and q_max must be positive");
  }
  price_ = params_.initial_price;
}

ActionSpace TradingEnv::action_space() const {
  return ActionSpace{false, 1, {-params_.a_max}, {params_.a_max}};
}

std::vector<double> TradingEnv::observe() const {
  const double remaining =
      static_cast<double>(params_.horizon - t_) / static_cast<double>(params_.horizon);
  return {price_, inventory_, remaining};
}

std::vector<double> TradingEnv::reset(Rng&) {
  price_ = params_.initial_price;
  inventory_ = 0.0;
  t_ = 0;
  return observe();
}

StepResult TradingEnv::step(std::span<const double> action, Rng& rng) {
  if (action.size() != 1) throw InputError("trading: action must have one component");
  if (t_ >= params_.horizon) throw InputError("trading: step after episode end");
  double a = std::clamp(action[0], -params_.a_max, params_.a_max);
  a = std::clamp(inventory_ + a, -params_.q_max, params_.q_max) - inventory_;
  std::normal_distribution<double> normal(0.0, 1.0);
  const double next_price = ou_step(params_, price_, normal(rng));
  const double next_inventory = inventory_ + a;
  const bool terminal = t_ + 1 == params_.horizon;
  const double reward = trading_reward(params_, price_, a, terminal, next_inventory, next_price);
  price_ = next_price;
  inventory_ = next_inventory;
  ++t_;
  return StepResult{reward, observe(), terminal};
}

std::unique_ptr<Environment> TradingEnv::clone() const { return std::make_unique<TradingEnv>(*this); }

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  return out;
}

double parse_double_field(const std::string& field, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw DatasetError(DatasetError::Kind::Format, where + ": bad number '" + field + "'");
  }
  return v;
}

}  // namespace

ReturnSeries load_return_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(DatasetError::Kind::Format, "cannot open return series " + path);
  std::string line;
  if (!std::getline(in, line)) throw DatasetError(DatasetError::Kind::Format, path + ": empty file");
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "date") {
    throw DatasetError(DatasetError::Kind::Format, path + ": header must be date,asset1,...");
  }
  ReturnSeries series;
  series.assets.assign(header.begin() + 1, header.end());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (fields.size() != header.size()) {
      throw DatasetError(DatasetError::Kind::Format,
                         where + ": expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(series.assets.size());
    for (std::size_t k = 1; k < fields.size(); ++k) row.push_back(parse_double_field(fields[k], where));
    series.dates.push_back(fields[0]);
    series.rows.push_back(std::move(row));
  }
  return series;
}

ReturnSeries split_series(const ReturnSeries& series, double fraction, bool train) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("split fraction must lie in (0, 1)");
  const auto cut = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(series.size())));
  ReturnSeries out;
  out.assets = series.assets;
  const std::size_t lo = train ? 0 : cut;
  const std::size_t hi = train ? cut : series.size();
  out.dates.assign(series.dates.begin() + lo, series.dates.begin() + hi);
  out.rows.assign(series.rows.begin() + lo, series.rows.begin() + hi);
  return out;
}

std::vector<double> project_to_simplex(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<double> u(v.begin(), v.end());
  for (double& x : u) {
    if (!std::isfinite(x)) x = 0.0;
  }
  std::vector<double> sorted = u;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    cum += sorted[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0) theta = t;
  }
  for (double& x : u) x = std::max(0.0, x - theta);
  return u;
}

PortfolioStepResult portfolio_step(std::span<const double> prev_weights,
                                   std::span<const double> weights,
                                   std::span<const double> log_returns, double cost) {
  const std::size_t k = weights.size();
  if (prev_weights.size() != k || log_returns.size() != k) {
    throw InputError("portfolio_step: weight/return size mismatch");
  }
  double growth = 0.0;
  double turnover = 0.0;
  std::vector<double> drifted(k);
  for (std::size_t i = 0; i < k; ++i) {
    drifted[i] = weights[i] * std::exp(log_returns[i]);
    growth += drifted[i];
    turnover += std::abs(weights[i] - prev_weights[i]);
  }
  for (double& w : drifted) w /= growth;
  return PortfolioStepResult{std::log(growth) - cost * turnover, std::move(drifted)};
}

PortfolioEnv::PortfolioEnv(ReturnSeries series, PortfolioParams params)
    : series_(std::move(series)), params_(params) {
  if (series_.assets.empty()) throw DatasetError(DatasetError::Kind::Format, "portfolio: no assets");
  if (series_.size() < params_.window + params_.episode_length) {
    throw DatasetError(DatasetError::Kind::TooShort,
                       "portfolio: series has " + std::to_string(series_.size()) +
                           " rows, needs at least " +
                           std::to_string(params_.window + params_.episode_length));
  }
  weights_.assign(series_.assets.size(), 1.0 / static_cast<double>(series_.assets.size()));
}

std::size_t PortfolioEnv::observation_dim() const {
  return series_.assets.size() * (params_.window + 1);
}

ActionSpace PortfolioEnv::action_space() const {
  const std::size_t k = series_.assets.size();
  return ActionSpace{false, k, std::vector<double>(k, 0.0), std::vector<double>(k, 1.0)};
}

std::vector<double> PortfolioEnv::observe() const {
  std::vector<double> obs;
  obs.reserve(observation_dim());
  const std::size_t now = start_ + t_;
  for (std::size_t lag = params_.window; lag > 0; --lag) {
    const auto& row = series_.rows[now - lag];
    obs.insert(obs.end(), row.begin(), row.end());
  }
  obs.insert(obs.end(), weights_.begin(), weights_.end());
  return obs;
}

std::vector<double> PortfolioEnv::reset_at(std::size_t start) {
  if (start < params_.window || start + params_.episode_length > series_.size()) {
    throw InputError("portfolio: episode start out of range");
  }
  start_ = start;
  t_ = 0;
  weights_.assign(series_.assets.size(), 1.0 / static_cast<double>(series_.assets.size()));
  return observe();
}

std::vector<double> PortfolioEnv::reset(Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(params_.window,
                                                  series_.size() - params_.episode_length);
  return reset_at(pick(rng));
}

StepResult PortfolioEnv::step(std::span<const double> action, Rng&) {
  if (action.size() != series_.assets.size()) throw InputError("portfolio: action size mismatch");
  if (t_ >= params_.episode_length) throw InputError("portfolio: step after episode end");
  const std::vector<double> target = project_to_simplex(action);
  auto r = portfolio_step(weights_, target, series_.rows[start_ + t_], params_.cost);
  weights_ = std::move(r.drifted_weights);
  ++t_;
  const bool done = t_ == params_.episode_length;
  std::vector<double> obs = observe();
  return StepResult{r.reward, std::move(obs), done};
}

std::unique_ptr<Environment> PortfolioEnv::clone() const {
  return std::make_unique<PortfolioEnv>(*this);
}

// ---------------------------------------------------------------------------

double TabularMdp::r_min() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& outcomes : rewards) {
    for (const auto& o : outcomes) m = std::min(m, o.value);
  }
  return m;
}

double TabularMdp::r_max() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& outcomes : rewards) {
    for (const auto& o : outcomes) m = std::max(m, o.value);
  }
  return m;
}

void TabularMdp::validate() const {
  constexpr double tol = 1e-12;
  if (num_states == 0 || num_actions == 0) throw InputError("mdp: empty state or action set");
  if (horizon == 0) throw InputError("mdp: horizon must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("mdp: gamma must lie in [0, 1)");
  if (xi0.size() != num_states) throw InputError("mdp: xi0 has wrong length");
  if (transitions.size() != num_states * num_actions * num_states) {
    throw InputError("mdp: transition tensor has wrong size");
  }
  if (rewards.size() != num_states * num_actions) throw InputError("mdp: reward table has wrong size");
  auto check_row = [&](double sum, const std::string& what) {
    if (std::abs(sum - 1.0) > tol) throw InputError("mdp: " + what + " does not sum to 1");
  };
  double xs = 0.0;
  for (double p : xi0) {
    if (p < 0.0) throw InputError("mdp: negative initial probability");
    xs += p;
  }
  check_row(xs, "xi0");
  for (std::size_t x = 0; x < num_states; ++x) {
    for (std::size_t a = 0; a < num_actions; ++a) {
      const std::string where = "(" + std::to_string(x) + "," + std::to_string(a) + ")";
      double ts = 0.0;
      for (std::size_t y = 0; y < num_states; ++y) {
        if (p(x, a, y) < 0.0) throw InputError("mdp: negative transition probability at " + where);
        ts += p(x, a, y);
      }
      check_row(ts, "transition row " + where);
      const auto& outcomes = reward(x, a);
      if (outcomes.empty()) throw InputError("mdp: empty reward support at " + where);
      double rs = 0.0;
      for (const auto& o : outcomes) {
        if (o.prob < 0.0) throw InputError("mdp: negative reward probability at " + where);
        if (!(o.value >= 0.0) || !std::isfinite(o.value)) {
          throw InputError("mdp: rewards must be finite and non-negative at " + where);
        }
        rs += o.prob;
      }
      check_row(rs, "reward distribution " + where);
    }
  }
}

TabularMdp tabular_mdp_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("mdp json: ") + e.what());
  }
  TabularMdp mdp;
  try {
    mdp.num_states = j.at("num_states").get<std::size_t>();
    mdp.num_actions = j.at("num_actions").get<std::size_t>();
    mdp.gamma = j.at("gamma").get<double>();
    mdp.horizon = j.at("horizon").get<std::size_t>();
    mdp.xi0 = j.at("xi0").get<std::vector<double>>();
    const auto& tr = j.at("transitions");
    const auto& rw = j.at("rewards");
    if (tr.size() != mdp.num_states || rw.size() != mdp.num_states) {
      throw InputError("mdp json: transitions/rewards must have num_states entries");
    }
    mdp.transitions.reserve(mdp.num_states * mdp.num_actions * mdp.num_states);
    for (std::size_t x = 0; x < mdp.num_states; ++x) {
      if (tr[x].size() != mdp.num_actions || rw[x].size() != mdp.num_actions) {
        throw InputError("mdp json: state " + std::to_string(x) + " needs num_actions entries");
      }
      for (std::size_t a = 0; a < mdp.num_actions; ++a) {
        const auto row = tr[x][a].get<std::vector<double>>();
        if (row.size() != mdp.num_states) {
          throw InputError("mdp json: transition row length mismatch");
        }
        mdp.transitions.insert(mdp.transitions.end(), row.begin(), row.end());
        std::vector<RewardOutcome> outcomes;
        for (const auto& o : rw[x][a]) {
          outcomes.push_back({o.at("value").get<double>(), o.at("prob").get<double>()});
        }
        mdp.rewards.push_back(std::move(outcomes));
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("mdp json: ") + e.what());
  }
  mdp.validate();
  return mdp;
}

std::string tabular_mdp_to_json(const TabularMdp& mdp) {
  using nlohmann::json;
  json j;
  j["num_states"] = mdp.num_states;
  j["num_actions"] = mdp.num_actions;
  j["gamma"] = mdp.gamma;
  j["horizon"] = mdp.horizon;
  j["xi0"] = mdp.xi0;
  json tr = json::array();
  json rw = json::array();
  for (std::size_t x = 0; x < mdp.num_states; ++x) {
    json trx = json::array();
    json rwx = json::array();
    for (std::size_t a = 0; a < mdp.num_actions; ++a) {
      json row = json::array();
      for (std::size_t y = 0; y < mdp.num_states; ++y) row.push_back(mdp.p(x, a, y));
      trx.push_back(row);
      json outs = json::array();
      for (const auto& o : mdp.reward(x, a)) outs.push_back({{"value", o.value}, {"prob", o.prob}});
      rwx.push_back(outs);
    }
    tr.push_back(trx);
    rw.push_back(rwx);
  }
  j["transitions"] = tr;
  j["rewards"] = rw;
  return j.dump(2);
}

TabularMdp load_tabular_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open mdp file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return tabular_mdp_from_json(ss.str());
}

void save_tabular_mdp(const TabularMdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write mdp file " + path);
  out << tabular_mdp_to_json(mdp) << '\n';
}

TabularStep tabular_step(const TabularMdp& mdp, std::size_t state, std::size_t action,
                         std::size_t t, Rng& rng) {
  if (state >= mdp.num_states || action >= mdp.num_actions) {
    throw InputError("tabular_step: state or action index out of range");
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto& outcomes = mdp.reward(state, action);
  double u = unif(rng);
  double reward = outcomes.back().value;
  for (const auto& o : outcomes) {
    if (u < o.prob) {
      reward = o.value;
      break;
    }
    u -= o.prob;
  }
  u = unif(rng);
  std::size_t next = mdp.num_states - 1;
  for (std::size_t y = 0; y < mdp.num_states; ++y) {
    const double p = mdp.p(state, action, y);
    if (u < p) {
      next = y;
      break;
    }
    u -= p;
  }
  return TabularStep{reward, next, t + 1 >= mdp.horizon};
}

TabularMdp deterministic_fixture() {
  TabularMdp mdp;
  mdp.num_states = 1;
  mdp.num_actions = 1;
  mdp.gamma = 0.5;
  mdp.horizon = 2;
  mdp.xi0 = {1.0};
  mdp.transitions = {1.0};
  mdp.rewards = {{{1.0, 1.0}}};
  mdp.validate();
  return mdp;
}

TabularMdp bandit_fixture() {
  TabularMdp mdp;
  mdp.num_states = 1;
  mdp.num_actions = 2;
  mdp.gamma = 0.9;
  mdp.horizon = 1;
  mdp.xi0 = {1.0};
  mdp.transitions = {1.0, 1.0};
  mdp.rewards = {{{0.0, 0.5}, {2.0, 0.5}}, {{0.9, 1.0}}};
  mdp.validate();
  return mdp;
}

TabularMdp chain_fixture() {
  TabularMdp mdp;
  mdp.num_states = 3;
  mdp.num_actions = 2;
  mdp.gamma = 0.9;
  mdp.horizon = 2;
  mdp.xi0 = {1.0, 0.0, 0.0};
  // [x][a][x']
  mdp.transitions = {
      0.0, 1.0, 0.0,  0.0, 0.5, 0.5,  // x=0
      0.0, 1.0, 0.0,  0.0, 1.0, 0.0,  // x=1
      0.0, 0.0, 1.0,  0.0, 0.0, 1.0,  // x=2
  };
  mdp.rewards = {
      {{1.0, 1.0}}, {{0.0, 0.5}, {2.0, 0.5}},
      {{1.0, 1.0}}, {{0.0, 0.5}, {3.0, 0.5}},
      {{0.5, 1.0}}, {{0.0, 0.3}, {2.0, 0.7}},
  };
  mdp.validate();
  return mdp;
}

TabularEnv::TabularEnv(TabularMdp mdp) : mdp_(std::move(mdp)) { mdp_.validate(); }

ActionSpace TabularEnv::action_space() const {
  return ActionSpace{true, mdp_.num_actions, {0.0}, {static_cast<double>(mdp_.num_actions - 1)}};
}

std::vector<double> TabularEnv::observe() const {
  std::vector<double> obs(mdp_.num_states + 1, 0.0);
  obs[state_] = 1.0;
  obs[mdp_.num_states] =
      static_cast<double>(mdp_.horizon - t_) / static_cast<double>(mdp_.horizon);
  return obs;
}

std::vector<double> TabularEnv::reset(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  state_ = mdp_.num_states - 1;
  for (std::size_t x = 0; x < mdp_.num_states; ++x) {
    if (u < mdp_.xi0[x]) {
      state_ = x;
      break;
    }
    u -= mdp_.xi0[x];
  }
  t_ = 0;
  return observe();
}

StepResult TabularEnv::step(std::span<const double> action, Rng& rng) {
  if (action.size() != 1) throw InputError("tabular: action must be a single index");
  const auto a = static_cast<std::size_t>(std::llround(action[0]));
  auto r = tabular_step(mdp_, state_, a, t_, rng);
  state_ = r.next_state;
  ++t_;
  return StepResult{r.reward, observe(), r.done};
}

std::unique_ptr<Environment> TabularEnv::clone() const { return std::make_unique<TabularEnv>(*this); }

}  // namespace srm
