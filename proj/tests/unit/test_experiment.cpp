#include <doctest.h>

#include <filesystem>
#include <string>

#include "srm/errors.hpp"
#include "srm/experiment.hpp"

using namespace srm;
using doctest::Approx;

namespace {
std::string error_of(const std::string& text, const std::vector<std::string>& overrides = {}) {
  try {
    parse_config(text, overrides);
  } catch (const InputError& e) {
    return e.what();
  } catch (const ParameterError& e) {
    return e.what();
  }
  return "";
}
}  // namespace

TEST_CASE("config defaults and overrides") {
  const ExperimentConfig c = parse_config("{}");
  CHECK(c.mode == RunMode::Online);
  CHECK(c.steps == 50000);
  CHECK(c.seeds.size() == 5);
  CHECK(c.eval_episodes == 1000);
  const ExperimentConfig d = parse_config(R"({"agent": {"lr": 0.01}, "spectrum": "cvar:0.2"})",
                                          {"agent.lr=1e-3", "seeds=[7]", "env.name=trading"});
  CHECK(d.agent.lr == 1e-3);
  CHECK(d.seeds == std::vector<std::uint64_t>{7});
  CHECK(d.spectrum == RiskSpectrum::cvar(0.2));
  CHECK(parse_config(R"({"agent": {"lambda": 0.3}})").agent.awac_lambda == 0.3);
  CHECK(parse_config(R"({"env": {"name": "deterministic"}})").agent.gamma == 0.5);
  CHECK(parse_config(R"({"env": {"name": "bandit"}, "agent": {"gamma": 0.7}})").agent.gamma == 0.7);
}

TEST_CASE("config errors name the problem") {
  CHECK(error_of("{\"mode\": \"online\",}").find("line 1") != std::string::npos);
  CHECK(error_of(R"({"agent": {"bogus": 1}})").find("agent.bogus") != std::string::npos);
  CHECK(error_of(R"({"steps": "many"})").find("steps") != std::string::npos);
  CHECK(error_of("{}", {"cvar_alpha=0"}).find("cvar_alpha") != std::string::npos);
  CHECK(error_of("{}", {"noequals"}).find("noequals") != std::string::npos);
  CHECK(error_of(R"({"mode": "offline", "algorithm": "td3-srm"})").find("algorithm") != std::string::npos);
  CHECK(error_of(R"({"mode": "tabular", "env": {"name": "trading"}})").find("env.name") != std::string::npos);
  CHECK_FALSE(error_of(R"({"spectrum": "cvar:7"})").empty());
}

TEST_CASE("tabular experiment reports exact values") {
  const ExperimentConfig c = parse_config(
      R"({"mode": "tabular", "env": {"name": "bandit"}, "algorithm": "ac-srm", "spectrum": "cvar:0.5",
          "seeds": [1], "eval_episodes": 100})");
  const EvalReport r = run_experiment(c);
  double srm_exact = -1.0;
  for (const auto& [k, v] : r.extras) {
    if (k == "srm_exact") srm_exact = v;
  }
  CHECK(srm_exact == Approx(0.9).epsilon(1e-6));
  CHECK(r.mean() == Approx(0.9).epsilon(1e-6));
}

TEST_CASE("risk curve") {
  EvalReport r;
  r.seeds = {{1, {1, 2, 3, 4}, std::nullopt, std::nullopt}, {2, {2, 3, 4, 5}, std::nullopt, std::nullopt}};
  const auto curve = risk_curve(r, {0.5, 1.0});
  CHECK(curve[0].mean == Approx(2.0));
  CHECK(curve[0].std == Approx(0.5));
  CHECK(curve[1].mean == Approx(3.0));
  CHECK(risk_curve_csv(curve).rfind("alpha,mean_score,std_score\n", 0) == 0);
}

TEST_CASE("evaluating a saved checkpoint is deterministic") {
  const auto dir = std::filesystem::temp_directory_path() / "srm_unit_eval";
  std::filesystem::remove_all(dir);
  ExperimentConfig c = parse_config(R"({"env": {"name": "trading"}, "agent": {"hidden": [8, 8], "batch_size": 8,
      "warmup_steps": 50}, "steps": 200, "seeds": [4], "eval_episodes": 50})");
  c.output_dir = dir.string();
  run_experiment(c);
  const std::string ckpt = (dir / "checkpoint_seed4.json").string();
  REQUIRE(std::filesystem::exists(ckpt));
  const std::string a = metrics_csv(evaluate_checkpoints(c, {ckpt}));
  const std::string b = metrics_csv(evaluate_checkpoints(c, {ckpt}));
  CHECK(a == b);
  std::filesystem::remove_all(dir);
}
