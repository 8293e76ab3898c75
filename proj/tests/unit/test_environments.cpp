#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "srm/environments.hpp"
#include "srm/errors.hpp"

using namespace srm;
using doctest::Approx;

TEST_CASE("extended state recursion") {
  const ExtendedState x0{{}, 0.0, 1.0};
  const ExtendedState x1 = extend_step(x0, 3.0, 0.9, {});
  CHECK(x1.s == 3.0);
  CHECK(x1.c == Approx(0.9));
  const ExtendedState y = extend_step(extend_step(x0, 1.0, 0.5, {}), 1.0, 0.5, {});
  CHECK(y.s == 1.5);
  CHECK(y.c == 0.25);
}

TEST_CASE("OU transition") {
  TradingParams p;
  CHECK(ou_step(p, p.zeta, 0.0) == Approx(p.zeta));
  p.zeta = 1.0;
  p.kappa = std::log(2.0) / p.dt;
  CHECK(ou_step(p, 2.0, 0.0) == Approx(1.5));
}

TEST_CASE("trading reward") {
  const TradingParams p;
  CHECK(trading_reward(p, 1.3, 0.0, false, 0.0, 1.3) == 0.0);
  CHECK(trading_reward(p, 2.0, 1.0, false, 1.0, 2.0) == Approx(-2.005));
  CHECK(trading_reward(p, 1.0, 0.0, true, 2.0, 1.0) == Approx(0.0));
}

TEST_CASE("trading env respects inventory and horizon") {
  TradingEnv env;
  Rng rng(3);
  env.reset(rng);
  std::size_t steps = 0;
  bool done = false;
  while (!done) {
    const std::vector<double> a{1.0};
    const StepResult r = env.step(a, rng);
    CHECK(std::abs(env.inventory()) <= env.params().q_max + 1e-12);
    CHECK(r.observation.size() == env.observation_dim());
    done = r.done;
    ++steps;
  }
  CHECK(steps == env.horizon());
}

TEST_CASE("portfolio step") {
  const std::vector<double> w{0.0, 1.0};
  CHECK(portfolio_step(w, w, std::vector<double>{0.3, 0.0}).reward == Approx(0.0));
  const std::vector<double> one{1.0, 0.0};
  CHECK(portfolio_step(one, one, std::vector<double>{0.01, 0.0}).reward == Approx(0.01));
  CHECK(portfolio_step(one, w, std::vector<double>{0.0, 0.0}).reward == Approx(-0.005));
}

TEST_CASE("simplex projection") {
  const auto p = project_to_simplex(std::vector<double>{0.5, 2.0, -1.0});
  CHECK(p[0] == Approx(0.0));
  CHECK(p[1] == Approx(1.0));
  CHECK(p[2] == Approx(0.0));
  const auto q = project_to_simplex(std::vector<double>{0.2, 0.2});
  CHECK(q[0] == Approx(0.5));
}

TEST_CASE("portfolio series too short") {
  const auto path = std::filesystem::temp_directory_path() / "srm_short_returns.csv";
  {
    std::ofstream out(path);
    out << "date,a,b\n";
    for (int i = 0; i < 20; ++i) out << "2020-01-" << (10 + i) << ",0.01,-0.01\n";
  }
  const ReturnSeries s = load_return_series(path.string());
  CHECK(s.size() == 20);
  CHECK(s.assets.size() == 2);
  try {
    PortfolioEnv env(s);
    FAIL("expected a dataset error");
  } catch (const DatasetError& e) {
    CHECK(e.kind() == DatasetError::Kind::TooShort);
  }
  std::filesystem::remove(path);
}

TEST_CASE("tabular fixtures") {
  const TabularMdp d = deterministic_fixture();
  Rng rng(1);
  TabularStep a = tabular_step(d, 0, 0, 0, rng);
  TabularStep b = tabular_step(d, a.next_state, 0, 1, rng);
  CHECK(a.reward + d.gamma * b.reward == 1.5);
  CHECK_FALSE(a.done);
  CHECK(b.done);
  CHECK_THROWS_AS(tabular_step(d, 3, 0, 0, rng), InputError);
  CHECK_THROWS_AS(tabular_step(d, 0, 2, 0, rng), InputError);
  const TabularMdp bandit = bandit_fixture();
  CHECK(bandit.reward(0, 1).front().value == 0.9);
}

TEST_CASE("tabular mdp json round trip and validation") {
  const TabularMdp c = chain_fixture();
  const TabularMdp back = tabular_mdp_from_json(tabular_mdp_to_json(c));
  CHECK(back.transitions == c.transitions);
  CHECK(back.gamma == c.gamma);
  TabularMdp bad = c;
  bad.transitions[0] = 0.5;
  CHECK_THROWS_AS(bad.validate(), InputError);
  CHECK_THROWS_AS(tabular_mdp_from_json("{\"num_states\": 1}"), InputError);
}

TEST_CASE("extended environment tracks s and c") {
  ExtendedEnvironment env(std::make_unique<TabularEnv>(deterministic_fixture()), 0.5);
  Rng rng(2);
  env.reset(rng);
  const std::vector<double> a{0.0};
  env.step(a, rng);
  const ExtendedStep last = env.step(a, rng);
  CHECK(last.done);
  CHECK(last.next.s == 1.5);
  CHECK(last.next.c == 0.25);
}
