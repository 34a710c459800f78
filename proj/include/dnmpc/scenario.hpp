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

#ifndef DNMPC_SCENARIO_HPP
#define DNMPC_SCENARIO_HPP

#include <dnmpc/controller.hpp>
#include <dnmpc/model.hpp>
#include <dnmpc/priority.hpp>
#include <dnmpc/solver.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace dnmpc {

struct ScheduleEntry {
  double t{0};
  Eigen::Vector3d target{Eigen::Vector3d::Zero()};
};

struct AgentSpec {
  int id{0};
  Eigen::Vector3d start{Eigen::Vector3d::Zero()};
  std::vector<ScheduleEntry> schedule;  // times non-decreasing
  double radius{0.4};
};

// Scripted agent exposing only (p, v); followed by waypoint interpolation.
struct NonCooperativeSpec {
  int id{0};
  double radius{0.4};
  std::vector<ScheduleEntry> waypoints;  // times strictly increasing
};

struct EstimatorConfig {
  double noise_std{0.0};          // position noise sigma [m]
  int median_window{3};
  double outlier_threshold{10.0}; // velocity jump rejection [m/s]
};

struct SimParams {
  double plant_dt{0.005};
  double control_dt{0.05};
  enum class Integrator { Rk4, Euler };
  Integrator integrator{Integrator::Rk4};
  double start_jitter{1e-3};  // seeded perturbation of initial positions [m]
};

struct ScenarioConfig {
  std::string name{"scenario"};
  double duration{10.0};
  unsigned long seed{1};
  std::vector<AgentSpec> agents;
  std::vector<NonCooperativeSpec> non_cooperative;
  ModelParams model;
  Weights weights;
  AlmSettings solver;
  PriorityParams priority;
  InputVec u_min{5.0, -0.25, -0.25};
  InputVec u_max{12.5, 0.25, 0.25};
  EstimatorConfig estimator;
  SimParams sim;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structural checks (ids, schedules, parameter ranges); throws ValidationError.
void validate_scenario(const ScenarioConfig& config);

ScenarioConfig load_scenario(const std::string& path);
void save_scenario(const ScenarioConfig& config, const std::string& path);
std::string scenario_to_json_string(const ScenarioConfig& config);
ScenarioConfig scenario_from_json_string(const std::string& text);

std::vector<std::string> builtin_scenario_names();
bool is_builtin_scenario(const std::string& name);
ScenarioConfig builtin_scenario(const std::string& name);

}  // namespace dnmpc

#endif  // DNMPC_SCENARIO_HPP
