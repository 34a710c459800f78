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

#ifndef DNMPC_METRICS_HPP
#define DNMPC_METRICS_HPP

#include <dnmpc/scenario.hpp>
#include <dnmpc/swarm.hpp>

#include <limits>
#include <string>
#include <vector>

namespace dnmpc {

struct Metrics {
  // agent-agent minimum distance per tick and its global minimum
  std::vector<double> min_pairwise_distance;
  double global_min_distance{std::numeric_limits<double>::infinity()};
  // agent-intruder distances (empty when no non-cooperative agents)
  std::vector<double> min_intruder_distance;
  double global_min_intruder_distance{std::numeric_limits<double>::infinity()};

  // solve-time histogram over [0, budget]; the last bin absorbs overruns
  std::vector<long> solve_time_histogram;
  double histogram_bin_width{0};
  double solve_time_mean{0};
  double solve_time_max{0};

  long total_solves{0};
  long nonconverged_solves{0};
  double nonconvergence_rate{0};

  // per-tick solver diagnostics, max/total across agents
  std::vector<double> max_fpr;
  std::vector<double> max_y_norm;
  std::vector<double> max_infeasibility;
  std::vector<int> total_inner_iters;
};

// Pure function of the log; recomputable offline from the exported files.
Metrics metrics_report(const RunLog& log);

// Writes trajectory.csv (deterministic series), timing.csv (wall-clock solve
// times), intruders.csv, min_distance.csv, config_echo.json and summary.json.
void write_run_outputs(const RunLog& log, const ScenarioConfig& config,
                       const std::string& out_dir);

// Rebuilds a RunLog from an output directory written by write_run_outputs.
RunLog read_run_outputs(const std::string& out_dir);

std::string metrics_summary_json(const Metrics& metrics, const RunLog& log);

}  // namespace dnmpc

#endif  // DNMPC_METRICS_HPP
