#include "srm/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "srm/errors.hpp"
#include "srm/tabular_srm.hpp"
#include "srm/training.hpp"

namespace srm {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Environments

TabularMdp make_tabular_mdp(const EnvSpec& spec) {
  if (spec.name == "bandit") return bandit_fixture();
  if (spec.name == "chain") return chain_fixture();
  if (spec.name == "deterministic") return deterministic_fixture();
  if (spec.name == "tabular") {
    if (spec.path.empty()) throw ParameterError("env.path is required for env.name = tabular");
    return load_tabular_mdp(spec.path);
  }
  throw ParameterError("env '" + spec.name + "' is not tabular");
}

std::unique_ptr<Environment> make_environment(const EnvSpec& spec) {
  if (spec.name == "trading") return std::make_unique<TradingEnv>(spec.trading);
  if (spec.name == "portfolio") {
    if (spec.path.empty()) throw ParameterError("env.path (returns CSV) is required for env.name = portfolio");
    return std::make_unique<PortfolioEnv>(split_series(load_return_series(spec.path), spec.split, spec.train_split),
                                          spec.portfolio);
  }
  return std::make_unique<TabularEnv>(make_tabular_mdp(spec));
}

std::optional<ScoreReference> default_reference(const EnvSpec& env) {
  if (env.name == "trading") return kTradingReference;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& msg) {
  throw InputError("config key '" + key + "': " + msg);
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw InputError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw InputError("override key '" + key + "' has an empty component");
    if (!node->is_object()) config_error(key, "parent is not an object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

/// Reads typed fields from one JSON object and rejects unknown keys.
class Fields {
 public:
  Fields(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) config_error(prefix_.empty() ? "<root>" : prefix_.substr(0, prefix_.size() - 1), "expected an object");
  }

  template <class T>
  void get(const std::string& name, T& out) {
    seen_.insert(name);
    if (!obj_.contains(name)) return;
    try {
      out = obj_.at(name).get<T>();
    } catch (const json::exception&) {
      config_error(prefix_ + name, "has the wrong type (" + std::string(obj_.at(name).type_name()) + ")");
    }
  }

  bool has(const std::string& name) {
    seen_.insert(name);
    return obj_.contains(name);
  }

  const json& at(const std::string& name) const { return obj_.at(name); }
  std::string path(const std::string& name) const { return prefix_ + name; }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.count(k)) config_error(prefix_ + k, "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

template <class F>
auto guarded(const std::string& key, F f) {
  try {
    return f();
  } catch (const ParameterError& e) {
    config_error(key, e.what());
  }
}

ExperimentConfig from_json(const json& root) {
  ExperimentConfig c;
  Fields f(root, "");
  std::string mode = "online";
  f.get("mode", mode);
  if (mode == "online") {
    c.mode = RunMode::Online;
  } else if (mode == "offline") {
    c.mode = RunMode::Offline;
  } else if (mode == "tabular") {
    c.mode = RunMode::Tabular;
  } else {
    config_error("mode", "must be online, offline or tabular, got '" + mode + "'");
  }
  if (f.has("env")) {
    const json& e = f.at("env");
    if (e.is_string()) {
      c.env.name = e.get<std::string>();
    } else {
      Fields ef(e, "env.");
      ef.get("name", c.env.name);
      ef.get("path", c.env.path);
      ef.get("split", c.env.split);
      ef.get("train_split", c.env.train_split);
      TradingParams& t = c.env.trading;
      ef.get("zeta", t.zeta);
      ef.get("kappa", t.kappa);
      ef.get("sigma", t.sigma);
      ef.get("trade_cost", t.trade_cost);
      ef.get("psi", t.psi);
      ef.get("a_max", t.a_max);
      ef.get("q_max", t.q_max);
      ef.get("horizon", t.horizon);
      ef.get("dt", t.dt);
      ef.get("initial_price", t.initial_price);
      ef.get("window", c.env.portfolio.window);
      ef.get("episode_length", c.env.portfolio.episode_length);
      ef.get("cost", c.env.portfolio.cost);
      ef.finish();
    }
  }
  static const std::set<std::string> envs{"trading", "portfolio", "bandit", "chain", "deterministic", "tabular"};
  if (!envs.count(c.env.name)) config_error("env.name", "unknown environment '" + c.env.name + "'");

  std::string algo = to_string(c.algorithm);
  f.get("algorithm", algo);
  c.algorithm = guarded("algorithm", [&] { return parse_algorithm(algo); });
  std::string spectrum = "neutral";
  f.get("spectrum", spectrum);
  c.spectrum = guarded("spectrum", [&] { return RiskSpectrum::parse(spectrum); });
  f.get("steps", c.steps);
  f.get("seeds", c.seeds);
  if (c.seeds.empty()) config_error("seeds", "must list at least one seed");
  f.get("eval_episodes", c.eval_episodes);
  if (c.eval_episodes == 0) config_error("eval_episodes", "must be positive");
  f.get("eval_seed", c.eval_seed);
  f.get("cvar_alpha", c.cvar_alpha);
  if (!(c.cvar_alpha > 0.0 && c.cvar_alpha <= 1.0)) config_error("cvar_alpha", "must lie in (0, 1]");
  f.get("output_dir", c.output_dir);
  f.get("threads", c.threads);
  f.get("outer_iterations", c.outer_iterations);
  f.get("inner_iterations", c.inner_iterations);
  f.get("npg_eta", c.npg_eta);

  c.reference = default_reference(c.env);
  if (f.has("reference")) {
    const json& r = f.at("reference");
    if (r.is_null()) {
      c.reference.reset();
    } else {
      Fields rf(r, "reference.");
      ScoreReference ref;
      rf.get("random", ref.random);
      rf.get("expert", ref.expert);
      rf.finish();
      if (ref.random == ref.expert) config_error("reference", "random and expert references coincide");
      c.reference = ref;
    }
  }

  // Tabular MDPs carry their own discount; agent.gamma overrides it when given.
  static const std::set<std::string> mdp_envs{"bandit", "chain", "deterministic", "tabular"};
  if (mdp_envs.count(c.env.name)) c.agent.gamma = make_tabular_mdp(c.env).gamma;
  if (f.has("agent")) {
    Fields af(f.at("agent"), "agent.");
    AgentConfig& a = c.agent;
    af.get("lr", a.lr);
    af.get("gamma", a.gamma);
    af.get("batch_size", a.batch_size);
    af.get("quantiles", a.quantiles);
    af.get("nu", a.nu);
    af.get("policy_delay", a.policy_delay);
    af.get("h_interval", a.h_interval);
    af.get("kappa", a.kappa);
    af.get("lambda", a.awac_lambda);
    af.get("bc_coef", a.bc_coef);
    af.get("exploration_noise", a.exploration_noise);
    af.get("target_noise", a.target_noise);
    af.get("noise_clip", a.noise_clip);
    af.get("gaussian_std", a.gaussian_std);
    af.get("hidden", a.hidden);
    af.get("warmup_steps", a.warmup_steps);
    af.get("value_samples", a.value_samples);
    af.get("weight_clamp", a.weight_clamp);
    af.finish();
    if (a.h_interval == 0) config_error("agent.h_interval", "must be positive");
  }

  if (f.has("dataset")) {
    const json& d = f.at("dataset");
    if (d.is_string()) {
      c.dataset.path = d.get<std::string>();
    } else {
      Fields df(d, "dataset.");
      df.get("path", c.dataset.path);
      df.get("generator", c.dataset.generator);
      df.get("steps", c.dataset.steps);
      df.get("algorithm", c.dataset.algorithm);
      df.get("spectrum", c.dataset.spectrum);
      df.get("seed", c.dataset.seed);
      df.finish();
      if (!c.dataset.generator.empty() && c.dataset.generator != "random" && c.dataset.generator != "replay") {
        config_error("dataset.generator", "must be random or replay, got '" + c.dataset.generator + "'");
      }
    }
  }
  f.finish();
  if (c.mode == RunMode::Offline && !is_offline(c.algorithm)) {
    config_error("algorithm", "offline mode needs oac-srm or td3bc-srm");
  }
  if (c.mode == RunMode::Online && is_offline(c.algorithm)) {
    config_error("algorithm", "online mode needs ac-srm or td3-srm");
  }
  if (c.mode == RunMode::Tabular && (c.env.name == "trading" || c.env.name == "portfolio")) {
    config_error("env.name", "tabular mode needs bandit, chain, deterministic or tabular");
  }
  return c;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config syntax error: ") + e.what());  // message carries line and column
  }
  if (!root.is_object()) throw InputError("config must be a JSON object");
  for (const auto& o : overrides) apply_override(root, o);
  return from_json(root);
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), overrides);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Runs

namespace {

void fill_portfolio_stats(SeedResult& out, const SrmAgent& agent, const Environment& env, const ExperimentConfig& c) {
  const auto paths = rollout_rewards(agent, env, std::min<std::size_t>(c.eval_episodes, 200), c.eval_seed);
  double sr_sum = 0.0;
  std::size_t sr_count = 0;
  double mdd_sum = 0.0;
  for (const auto& p : paths) {
    if (p.size() >= 2) {
      if (auto s = sharpe(p)) {
        sr_sum += *s;
        ++sr_count;
      }
    }
    mdd_sum += max_drawdown(wealth_path(p));
  }
  if (sr_count > 0) out.sharpe = sr_sum / static_cast<double>(sr_count);
  if (!paths.empty()) out.max_drawdown = mdd_sum / static_cast<double>(paths.size());
}

SeedResult evaluate_one(const SrmAgent& agent, const Environment& env, const ExperimentConfig& c, std::uint64_t seed) {
  SeedResult r;
  r.seed = seed;
  r.returns = evaluate_agent(agent, env, c.eval_episodes, c.eval_seed, c.threads);
  if (env.name() == "portfolio") fill_portfolio_stats(r, agent, env, c);
  return r;
}

std::string label_of(const ExperimentConfig& c) {
  return to_string(c.algorithm) + "/" + c.spectrum.to_string() + "/" + c.env.name;
}

double sample_tabular_return(const ExtendedStateSpace& space, const TabularPolicy& policy, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&](auto&& weight, std::size_t n) {
    double u = unif(rng);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      if (u < weight(k)) return k;
      u -= weight(k);
    }
    return n - 1;
  };
  const auto& roots = space.roots();
  int node = static_cast<int>(roots[draw([&](std::size_t k) { return roots[k].second; }, roots.size())].first);
  double g = 0.0;
  while (node >= 0) {
    const ExtendedNode& n = space.node(static_cast<std::size_t>(node));
    const auto& pi = policy.probs[static_cast<std::size_t>(node)];
    const std::size_t a = draw([&](std::size_t k) { return pi[k]; }, pi.size());
    const auto& edges = n.edges[a];
    const ExtendedEdge& e = edges[draw([&](std::size_t k) { return edges[k].prob; }, edges.size())];
    g += n.c * e.reward;
    node = e.child;
  }
  return g;
}

EvalReport run_tabular(const ExperimentConfig& c) {
  const TabularMdp mdp = make_tabular_mdp(c.env);
  BilevelConfig bc;
  bc.outer_iterations = c.outer_iterations;
  bc.quantiles = c.agent.quantiles;
  bc.inner.iterations = c.inner_iterations;
  bc.inner.eta = c.npg_eta;
  const BilevelResult res = bilevel_train(mdp, c.spectrum, bc);
  const ExtendedStateSpace space(mdp);
  const TabularPolicy policy = res.policy.probabilities();
  EvalReport report;
  report.label = "ac-srm/" + c.spectrum.to_string() + "/" + c.env.name;
  report.cvar_alpha = c.cvar_alpha;
  report.reference = c.reference;
  for (std::uint64_t seed : c.seeds) {
    SeedResult r;
    r.seed = seed;
    Rng rng(seed ^ c.eval_seed);
    for (std::size_t i = 0; i < c.eval_episodes; ++i) r.returns.push_back(sample_tabular_return(space, policy, rng));
    report.seeds.push_back(std::move(r));
  }
  report.extras = {{"srm_exact", res.srm_history.back()},
                   {"srm_initial", res.srm_history.front()},
                   {"mean_exact", res.final_law.initial.mean()}};
  return report;
}

}  // namespace

TransitionDataset obtain_dataset(const ExperimentConfig& c) {
  const DatasetSpec& d = c.dataset;
  if (d.generator.empty()) {
    if (d.path.empty()) throw InputError("offline run needs dataset.path or dataset.generator");
    return load_dataset(d.path);
  }
  const auto env = make_environment(c.env);
  TransitionDataset data;
  if (d.generator == "random") {
    const ActionSpace space = env->action_space();
    const PolicyFn policy = [space](const ExtendedState&, Rng& rng) { return random_action(space, rng); };
    data = generate_dataset(*env, c.agent.gamma, policy, d.steps, d.seed, "random");
  } else {
    const Algorithm algo = parse_algorithm(d.algorithm);
    if (is_offline(algo)) throw ParameterError("dataset.algorithm must be an online algorithm");
    SrmAgent agent(algo, c.agent, env->observation_dim(), env->action_space(), RiskSpectrum::parse(d.spectrum), d.seed);
    OnlineOptions o;
    o.steps = d.steps;
    o.seed = d.seed;
    train_online(agent, *env, o, &data);
    data.meta.policy = "replay:" + d.algorithm + ":" + d.spectrum;
  }
  validate_dataset(data);
  if (!d.path.empty()) save_dataset(data, d.path);
  return data;
}

EvalReport run_experiment(const ExperimentConfig& c) {
  if (!c.output_dir.empty()) std::filesystem::create_directories(c.output_dir);
  if (c.mode == RunMode::Tabular) {
    EvalReport report = run_tabular(c);
    if (!c.output_dir.empty()) write_report_files(report, c.output_dir);
    return report;
  }
  const auto env = make_environment(c.env);
  EvalReport report;
  report.label = label_of(c);
  report.cvar_alpha = c.cvar_alpha;
  report.reference = c.reference;
  std::optional<TransitionDataset> data;
  if (c.mode == RunMode::Offline) data = obtain_dataset(c);
  std::ostringstream curve;
  curve << "seed,episode,return\n";
  for (std::uint64_t seed : c.seeds) {
    SrmAgent agent(c.algorithm, c.agent, env->observation_dim(), env->action_space(), c.spectrum, seed);
    TrainingTrace trace;
    if (c.mode == RunMode::Online) {
      OnlineOptions o;
      o.steps = c.steps;
      o.seed = seed;
      trace = train_online(agent, *env, o);
    } else {
      OfflineOptions o;
      o.steps = c.steps;
      o.seed = seed;
      trace = train_offline(agent, *data, o);
    }
    for (std::size_t i = 0; i < trace.episode_returns.size(); ++i) {
      curve << seed << ',' << i << ',' << format_double(trace.episode_returns[i]) << '\n';
    }
    report.seeds.push_back(evaluate_one(agent, *env, c, seed));
    if (!c.output_dir.empty()) {
      agent.save_checkpoint((std::filesystem::path(c.output_dir) / ("checkpoint_seed" + std::to_string(seed) + ".json")).string());
    }
  }
  if (!c.output_dir.empty()) {
    write_report_files(report, c.output_dir);
    if (c.mode == RunMode::Online) {
      std::ofstream((std::filesystem::path(c.output_dir) / "training_returns.csv").string()) << curve.str();
    }
  }
  return report;
}

EvalReport evaluate_checkpoints(const ExperimentConfig& c, const std::vector<std::string>& checkpoints) {
  if (checkpoints.empty()) throw InputError("evaluate: no checkpoints given");
  const auto env = make_environment(c.env);
  EvalReport report;
  report.cvar_alpha = c.cvar_alpha;
  report.reference = c.reference;
  for (const auto& path : checkpoints) {
    const SrmAgent agent = SrmAgent::load_checkpoint(path);
    if (agent.obs_dim() != env->observation_dim()) {
      throw InputError(path + ": checkpoint observation dim does not match env '" + c.env.name + "'");
    }
    if (report.label.empty()) report.label = to_string(agent.algorithm()) + "/" + agent.spectrum().to_string() + "/" + c.env.name;
    report.seeds.push_back(evaluate_one(agent, *env, c, agent.seed()));
  }
  if (!c.output_dir.empty()) {
    std::filesystem::create_directories(c.output_dir);
    write_report_files(report, c.output_dir);
  }
  return report;
}

std::vector<double> default_levels() {
  std::vector<double> out;
  for (int k = 1; k <= 10; ++k) out.push_back(k / 10.0);
  return out;
}

std::vector<RiskCurvePoint> risk_curve(const EvalReport& report, const std::vector<double>& levels) {
  std::vector<RiskCurvePoint> out;
  for (double alpha : levels) {
    std::vector<double> per_seed;
    for (const auto& s : report.seeds) {
      double v = empirical_cvar(s.returns, alpha);
      if (report.reference) v = normalized_score(v, report.reference->random, report.reference->expert);
      per_seed.push_back(v);
    }
    if (per_seed.empty()) throw InputError("risk_curve: report holds no seeds");
    const double n = static_cast<double>(per_seed.size());
    const double mean = std::accumulate(per_seed.begin(), per_seed.end(), 0.0) / n;
    double var = 0.0;
    for (double v : per_seed) var += (v - mean) * (v - mean);
    out.push_back({alpha, mean, std::sqrt(var / n)});
  }
  return out;
}

std::string risk_curve_csv(const std::vector<RiskCurvePoint>& curve) {
  std::ostringstream out;
  out << "alpha,mean_score,std_score\n";
  for (const auto& p : curve) {
    out << format_double(p.alpha) << ',' << format_double(p.mean) << ',' << format_double(p.std) << '\n';
  }
  return out.str();
}

void write_report_files(const EvalReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  auto write = [&](const char* name, const std::string& body) {
    std::ofstream out((root / name).string(), std::ios::binary);
    if (!out) throw InputError("cannot write " + (root / name).string());
    out << body;
  };
  write("metrics.csv", metrics_csv(report));
  write("report.json", report_to_json(report) + "\n");
  std::ostringstream returns;
  returns << "seed,episode,return\n";
  for (const auto& s : report.seeds) {
    for (std::size_t i = 0; i < s.returns.size(); ++i) {
      returns << s.seed << ',' << i << ',' << format_double(s.returns[i]) << '\n';
    }
  }
  write("returns.csv", returns.str());
  write("risk_curve.csv", risk_curve_csv(risk_curve(report, default_levels())));
}

}  // namespace srm
