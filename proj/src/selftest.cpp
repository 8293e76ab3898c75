#include "srm/selftest.hpp"

#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "srm/agents.hpp"
#include "srm/metrics.hpp"
#include "srm/offline_data.hpp"
#include "srm/risk_functional.hpp"
#include "srm/tabular_srm.hpp"

namespace srm {

namespace {

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool cvar_identity() {
  const QuantileDistribution z({0.0, 2.0});
  const RiskSpectrum cvar = RiskSpectrum::cvar(0.5);
  return near(expect_h(build_h(cvar, z), z) - srm_of_quantiles(cvar, z), 1.0, 1e-12);
}

bool metric_constants() {
  return normalized_score(-6.17, -6.17, 1.72) == 0.0 && normalized_score(1.72, -6.17, 1.72) == 100.0 &&
         near(empirical_cvar(std::vector<double>{1, 2, 3, 4}, 0.375), 4.0 / 3.0, 1e-12) &&
         near(*sharpe(std::vector<double>{0.01, 0.03}), 2.0, 1e-12) &&
         near(max_drawdown(std::vector<double>{100, 120, 90, 110}), 0.25, 1e-15);
}

bool bilevel_monotone() {
  BilevelConfig cfg;
  cfg.outer_iterations = 5;
  cfg.inner.iterations = 50;
  for (const TabularMdp& mdp : {deterministic_fixture(), bandit_fixture(), chain_fixture()}) {
    const BilevelResult r = bilevel_train(mdp, RiskSpectrum::cvar(0.5), cfg);
    for (std::size_t k = 1; k < r.srm_history.size(); ++k) {
      if (r.srm_history[k] < r.srm_history[k - 1] - 1e-8) return false;
    }
  }
  return true;
}

bool perf_difference() {
  const TabularMdp mdp = chain_fixture();
  const ExtendedStateSpace space(mdp);
  const TabularPolicy uniform = TabularPolicy::uniform(space);
  const PiecewiseLinearH h = build_h(RiskSpectrum::cvar(0.3), law_quantiles(exact_return_distribution(space, uniform).initial, 20));
  TabularPolicy other = uniform;
  for (std::size_t i = 0; i < other.probs.size(); ++i) other.probs[i] = {0.2 + 0.05 * static_cast<double>(i % 7), 0.0};
  for (auto& p : other.probs) p[1] = 1.0 - p[0];
  const PerfDiff d = perf_diff_check(space, uniform, other, h);
  return near(d.lhs, d.rhs, 1e-8);
}

bool mlp_gradient() {
  Rng rng(7);
  const Mlp net({4, 6, 3}, rng);
  Matrix x = Matrix::Random(4, 5);
  Matrix w = Matrix::Random(3, 5);
  auto loss = [&](const Mlp& m) { return (m.forward(x).array() * w.array()).sum(); };
  Mlp::Cache cache;
  net.forward(x, &cache);
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(net.num_params()));
  net.backward(cache, w, &grad);
  Mlp probe = net;
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double keep = probe.params()[i];
    probe.params()[i] = keep + 1e-6;
    const double up = loss(probe);
    probe.params()[i] = keep - 1e-6;
    const double down = loss(probe);
    probe.params()[i] = keep;
    const double fd = (up - down) / 2e-6;
    if (std::abs(fd - grad[i]) > 1e-4 * std::max(1.0, std::abs(fd))) return false;
  }
  return true;
}

bool dataset_round_trip() {
  const auto dir = std::filesystem::temp_directory_path() / "srm_selftest";
  std::filesystem::create_directories(dir);
  const TabularEnv env(deterministic_fixture());
  const PolicyFn only = [](const ExtendedState&, Rng&) { return std::vector<double>{0.0}; };
  const TransitionDataset d = generate_dataset(env, 0.5, only, 3, 1, "constant");
  const std::string path = (dir / "fixture.srmd").string();
  save_dataset(d, path);
  const bool ok = load_dataset(path) == d && d.records[1].s == 1.0 && d.records[1].c == 0.5 && d.records[1].done &&
                  d.records[2].s == 0.0 && d.records[2].done;
  std::filesystem::remove_all(dir);
  return ok;
}

}  // namespace

bool run_selftest(std::ostream& out) {
  const std::vector<std::pair<const char*, std::function<bool()>>> checks{
      {"cvar error identity on the two-atom fixture", cvar_identity},
      {"metric constants and hand examples", metric_constants},
      {"bi-level monotone improvement on tabular fixtures", bilevel_monotone},
      {"performance-difference identity on the chain fixture", perf_difference},
      {"MLP backward vs central differences", mlp_gradient},
      {"dataset generate/save/load round trip", dataset_round_trip},
  };
  bool all = true;
  for (const auto& [name, check] : checks) {
    bool ok = false;
    std::string err;
    try {
      ok = check();
    } catch (const std::exception& e) {
      err = e.what();
    }
    all = all && ok;
    out << (ok ? "PASS " : "FAIL ") << name << (err.empty() ? "" : " (" + err + ")") << '\n';
  }
  return all;
}

}  // namespace srm
