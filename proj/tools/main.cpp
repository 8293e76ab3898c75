#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "srm/errors.hpp"
#include "srm/experiment.hpp"
#include "srm/selftest.hpp"

namespace {

void print_summary(const srm::EvalReport& r) {
  std::printf("%s: episodes %zu, mean %.6g, CVaR_%g %.6g", r.label.c_str(), r.episodes(), r.mean(), r.cvar_alpha,
              r.cvar());
  if (auto s = r.score()) std::printf(", normalized score %.4g", *s);
  std::printf("\n");
  for (const auto& [name, v] : r.extras) std::printf("  %s = %.10g\n", name.c_str(), v);
}

srm::ExperimentConfig config_for(const std::string& path, const std::vector<std::string>& sets) {
  if (path.empty()) return srm::parse_config("{}", sets);
  return srm::load_config(path, sets);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Static spectral-risk actor-critic training and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON config file");
    sub->add_option("--set", sets, "Override a config key, e.g. --set agent.lr=1e-3")->take_all();
  };

  auto* online = app.add_subcommand("train-online", "Train AC-SRM or TD3-SRM online, then evaluate");
  add_config(online);
  auto* offline = app.add_subcommand("train-offline", "Train OAC-SRM or TD3BC-SRM on a dataset, then evaluate");
  add_config(offline);

  auto* gen = app.add_subcommand("gen-dataset", "Generate a transition dataset (random or replay)");
  add_config(gen);
  std::string gen_out;
  gen->add_option("-o,--output", gen_out, "Dataset path (.csv writes a .meta.json sidecar)")->required();

  auto* eval = app.add_subcommand("evaluate", "Evaluate saved checkpoints");
  add_config(eval);
  std::vector<std::string> checkpoints;
  eval->add_option("checkpoints", checkpoints, "Checkpoint files, one per seed")->required();

  auto* curve = app.add_subcommand("risk-curve", "CVaR-level curve (alpha 0.1..1.0) of a run or saved report");
  add_config(curve);
  std::string report_path;
  std::string curve_out;
  curve->add_option("--report", report_path, "Use a saved report.json instead of training");
  curve->add_option("-o,--output", curve_out, "CSV path (default: stdout)");

  auto* self = app.add_subcommand("selftest", "Run the built-in oracle checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (online->parsed() || offline->parsed()) {
      auto cfg = config_for(config_path, sets);
      const bool want_offline = offline->parsed();
      if (want_offline != (cfg.mode == srm::RunMode::Offline)) {
        throw srm::InputError(std::string("config mode does not match ") + (want_offline ? "train-offline" : "train-online") +
                              " (set \"mode\" accordingly)");
      }
      const auto report = srm::run_experiment(cfg);
      print_summary(report);
      if (!cfg.output_dir.empty()) std::printf("artifacts written to %s\n", cfg.output_dir.c_str());
      return 0;
    }
    if (gen->parsed()) {
      auto cfg = config_for(config_path, sets);
      if (cfg.dataset.generator.empty()) cfg.dataset.generator = "random";
      cfg.dataset.path = gen_out;
      const auto data = srm::obtain_dataset(cfg);
      std::printf("wrote %zu transitions (%s, policy %s) to %s\n", data.size(), data.meta.env.c_str(),
                  data.meta.policy.c_str(), gen_out.c_str());
      return 0;
    }
    if (eval->parsed()) {
      const auto cfg = config_for(config_path, sets);
      print_summary(srm::evaluate_checkpoints(cfg, checkpoints));
      return 0;
    }
    if (curve->parsed()) {
      srm::EvalReport report;
      if (!report_path.empty()) {
        std::ifstream in(report_path);
        if (!in) throw srm::InputError("cannot open " + report_path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        report = srm::report_from_json(text);
      } else {
        report = srm::run_experiment(config_for(config_path, sets));
      }
      const std::string csv = srm::risk_curve_csv(srm::risk_curve(report, srm::default_levels()));
      if (curve_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream(curve_out) << csv;
      }
      return 0;
    }
    if (self->parsed()) return srm::run_selftest(std::cout) ? 0 : 1;
  } catch (const srm::InstabilityError& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
