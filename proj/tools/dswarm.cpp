/*
 Copyright 2026 The dnmpc-swarm authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <dnmpc/metrics.hpp>
#include <dnmpc/scenario.hpp>
#include <dnmpc/swarm.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"distributed NMPC swarm collision-avoidance simulator"};
  app.require_subcommand(1);

  std::string scenario_arg, out_dir = "out";
  long seed = -1;
  double duration = -1;
  auto* run = app.add_subcommand("run", "simulate a scenario and export logs");
  run->add_option("scenario", scenario_arg,
                  "scenario file path or builtin name")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--duration", duration, "override the duration [s]");

  std::string log_dir;
  auto* metrics = app.add_subcommand("metrics", "recompute metrics from an exported log");
  metrics->add_option("log-dir", log_dir, "directory written by 'run'")->required();

  auto* scenarios = app.add_subcommand("scenarios", "scenario utilities");
  auto* list = scenarios->add_subcommand("list", "list builtin scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      dnmpc::ScenarioConfig cfg = dnmpc::is_builtin_scenario(scenario_arg)
                                      ? dnmpc::builtin_scenario(scenario_arg)
                                      : dnmpc::load_scenario(scenario_arg);
      if (seed >= 0) cfg.seed = static_cast<unsigned long>(seed);
      if (duration >= 0) cfg.duration = duration;
      const dnmpc::RunLog log = dnmpc::simulate(cfg);
      dnmpc::write_run_outputs(log, cfg, out_dir);
      const dnmpc::Metrics m = dnmpc::metrics_report(log);
      std::cout << dnmpc::metrics_summary_json(m, log) << "\n";
      std::cout << "wrote " << out_dir << "/{trajectory,timing,intruders,min_distance}.csv\n";
    } else if (*metrics) {
      const dnmpc::RunLog log = dnmpc::read_run_outputs(log_dir);
      const dnmpc::Metrics m = dnmpc::metrics_report(log);
      std::cout << dnmpc::metrics_summary_json(m, log) << "\n";
    } else if (*list) {
      for (const auto& name : dnmpc::builtin_scenario_names()) {
        std::cout << name << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
