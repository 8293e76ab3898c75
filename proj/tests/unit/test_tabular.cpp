#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles/oracles.hpp"
#include "srm/errors.hpp"
#include "srm/tabular_srm.hpp"
#include "support.hpp"

using namespace srm;
using doctest::Approx;

namespace {
double prob(const DiscreteLaw& law, double v) {
  for (std::size_t i = 0; i < law.size(); ++i) {
    if (std::abs(law.values[i] - v) < 1e-12) return law.probs[i];
  }
  return 0.0;
}
}  // namespace

TEST_CASE("exact return distributions") {
  const ExtendedStateSpace d(deterministic_fixture());
  const DiscreteLaw point = exact_return_distribution(d, TabularPolicy::uniform(d)).initial;
  CHECK(point.size() == 1);
  CHECK(point.values[0] == Approx(1.5));

  const ExtendedStateSpace b(bandit_fixture());
  const DiscreteLaw risky = exact_return_distribution(b, TabularPolicy::deterministic(b, std::vector<std::size_t>(b.size(), 0))).initial;
  CHECK(prob(risky, 0.0) == Approx(0.5));
  CHECK(prob(risky, 2.0) == Approx(0.5));
  const DiscreteLaw uniform = exact_return_distribution(b, TabularPolicy::uniform(b)).initial;
  CHECK(prob(uniform, 0.0) == Approx(0.25));
  CHECK(prob(uniform, 0.9) == Approx(0.5));
  CHECK(prob(uniform, 2.0) == Approx(0.25));
}

TEST_CASE("exact laws match path enumeration") {
  std::mt19937_64 rng(9);
  const TabularMdp mdp = chain_fixture();
  const ExtendedStateSpace space(mdp);
  const TabularPolicy pi = testing_support::random_policy(space, rng);
  const DiscreteLaw law = exact_return_distribution(space, pi).initial;
  const auto paths = oracle::return_law(mdp, testing_support::path_policy(space, pi));
  for (double z : {-1.0, 0.5, 1.0, 1.9, 2.5, 3.0, 4.0}) CHECK(law.cdf(z) == Approx(oracle::law_cdf(paths, z, false)));
}

TEST_CASE("single-action MDP has zero advantage") {
  const ExtendedStateSpace d(deterministic_fixture());
  const PiecewiseLinearH h = build_h(RiskSpectrum::cvar(0.5), QuantileDistribution({1.0, 2.0}));
  for (const auto& row : exact_advantage(d, TabularPolicy::uniform(d), h)) {
    for (double a : row) CHECK(a == Approx(0.0));
  }
  NpgConfig cfg;
  cfg.iterations = 5;
  const NpgResult r = npg_inner_loop(d, SoftmaxPolicy::zeros(d), h, cfg);
  for (double j : r.j_history) CHECK(j == Approx(r.j_history.front()));
}

TEST_CASE("one NPG step adds eta / (1 - gamma) times the advantage") {
  const ExtendedStateSpace b(bandit_fixture());
  const PiecewiseLinearH h = build_h(RiskSpectrum::neutral(), QuantileDistribution({0.0, 0.9, 0.9, 2.0}));
  const auto adv = exact_advantage(b, TabularPolicy::uniform(b), h);
  NpgConfig cfg;
  cfg.iterations = 1;
  cfg.eta = 0.1;
  const NpgResult r = npg_inner_loop(b, SoftmaxPolicy::zeros(b), h, cfg);
  const std::size_t root = b.roots().front().first;
  const double scale = 0.1 / (1.0 - b.gamma());
  CHECK(r.policy.logits[root][0] == Approx(scale * adv[root][0]));
  CHECK(r.policy.logits[root][1] == Approx(scale * adv[root][1]));
  CHECK(adv[root][0] == Approx(-adv[root][1]));
}

TEST_CASE("bilevel training on the bandit") {
  const ExtendedStateSpace b(bandit_fixture());
  const std::size_t root = b.roots().front().first;
  const BilevelResult safe = bilevel_train(bandit_fixture(), RiskSpectrum::cvar(0.5), BilevelConfig{});
  CHECK(safe.policy.probabilities().probs[root][1] >= 0.99);
  const BilevelResult risky = bilevel_train(bandit_fixture(), RiskSpectrum::neutral(), BilevelConfig{});
  CHECK(risky.policy.probabilities().probs[root][0] >= 0.99);
  CHECK(risky.srm_history.back() == Approx(1.0).epsilon(1e-3));
}

TEST_CASE("neutral bilevel reaches the value-iteration optimum") {
  // Best expected return on the chain by enumeration of deterministic policies.
  const TabularMdp mdp = chain_fixture();
  const BilevelResult r = bilevel_train(mdp, RiskSpectrum::neutral(), BilevelConfig{});
  double best = -1e300;
  const auto points = oracle::decision_points(mdp);
  for (std::size_t code = 0; code < (std::size_t{1} << points.size()); ++code) {
    const oracle::PathPolicy pol = [&](const oracle::DecisionKey& k) {
      const std::size_t i = static_cast<std::size_t>(std::find(points.begin(), points.end(), k) - points.begin());
      const std::size_t a = (code >> i) & 1u;
      return std::vector<double>{a == 0 ? 1.0 : 0.0, a == 1 ? 1.0 : 0.0};
    };
    double mean = 0.0;
    for (const auto& [g, p] : oracle::return_law(mdp, pol)) mean += g * p;
    best = std::max(best, mean);
  }
  CHECK(r.final_law.initial.mean() == Approx(best).epsilon(1e-3));
}

TEST_CASE("performance difference examples") {
  const ExtendedStateSpace b(bandit_fixture());
  const TabularPolicy a0 = TabularPolicy::deterministic(b, std::vector<std::size_t>(b.size(), 0));
  const TabularPolicy a1 = TabularPolicy::deterministic(b, std::vector<std::size_t>(b.size(), 1));
  // One neutral breakpoint above every return: h(z) = z - 2.5 on the support.
  const PiecewiseLinearH h = build_h(RiskSpectrum::neutral(), QuantileDistribution({5.0}));
  const PerfDiff same = perf_diff_check(b, a0, a0, h);
  CHECK(same.lhs == Approx(0.0));
  CHECK(same.rhs == Approx(0.0));
  const PerfDiff d = perf_diff_check(b, a0, a1, h);
  CHECK(d.lhs == Approx(d.rhs));
  CHECK(h.slope(0.0) == Approx(1.0));
  CHECK(d.lhs == Approx(-0.1));
}

TEST_CASE("return laws and policies are normalized") {
  std::mt19937_64 rng(21);
  for (const TabularMdp& mdp : {deterministic_fixture(), bandit_fixture(), chain_fixture()}) {
    const ExtendedStateSpace space(mdp);
    const TabularPolicy pi = testing_support::random_policy(space, rng);
    const ExactReturnLaw law = exact_return_distribution(space, pi);
    CHECK(std::abs(law.initial.total_probability() - 1.0) <= 1e-10);
    // Finite horizon: G lies in [R_min, R_max] (1 - gamma^T) / (1 - gamma), inside [0, G_max].
    const double span = (1.0 - std::pow(mdp.gamma, static_cast<double>(mdp.horizon))) / (1.0 - mdp.gamma);
    for (std::size_t k = 0; k < law.initial.size(); ++k) {
      CHECK(law.initial.values[k] >= mdp.r_min() * span - 1e-12);
      CHECK(law.initial.values[k] <= mdp.r_max() * span + 1e-12);
      CHECK(law.initial.values[k] <= mdp.g_max());
    }
    for (const DiscreteLaw& l : law.node) CHECK(std::abs(l.total_probability() - 1.0) <= 1e-10);
    SoftmaxPolicy soft = SoftmaxPolicy::zeros(space);
    for (auto& row : soft.logits) {
      for (double& t : row) t = std::normal_distribution<double>(0.0, 3.0)(rng);
    }
    for (const auto& row : soft.probabilities().probs) {
      double total = 0.0;
      for (double p : row) total += p;
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
  const ExtendedStateSpace chain(chain_fixture());
  CHECK_THROWS_AS(exact_return_distribution(chain, TabularPolicy::uniform(chain), 3), SizeError);
}

TEST_CASE("bandit advantages under a linear h") {
  const ExtendedStateSpace b(bandit_fixture());
  const PiecewiseLinearH h = build_h(RiskSpectrum::neutral(), QuantileDistribution({5.0}));
  const TabularPolicy pi = TabularPolicy::uniform(b);
  const auto adv = exact_advantage(b, pi, h);
  const std::size_t root = b.roots().front().first;
  CHECK(adv[root][0] - adv[root][1] == Approx(0.1));
  CHECK(std::abs(0.5 * adv[root][0] + 0.5 * adv[root][1]) <= 1e-10);
  // V under the uniform mix is 0.95, so A(a0) = 1.0 - 0.95.
  CHECK(adv[root][0] == Approx(0.05));
}

TEST_CASE("NPG divergence guard") {
  const ExtendedStateSpace b(bandit_fixture());
  const PiecewiseLinearH h = build_h(RiskSpectrum::neutral(), QuantileDistribution({0.0, 2.0}));
  NpgConfig cfg;
  cfg.eta = 1e9;
  CHECK_THROWS_AS(npg_inner_loop(b, SoftmaxPolicy::zeros(b), h, cfg), InstabilityError);
}
