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

#ifndef DNMPC_SWARM_HPP
#define DNMPC_SWARM_HPP

#include <dnmpc/controller.hpp>
#include <dnmpc/model.hpp>
#include <dnmpc/priority.hpp>
#include <dnmpc/scenario.hpp>

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <vector>

namespace dnmpc {

struct ScenarioInvalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linear extrapolation of a non-cooperative obstacle track.
Eigen::Matrix3Xd constant_velocity_predict(const Eigen::Vector3d& p,
                                           const Eigen::Vector3d& v, int n,
                                           double dt);

// Velocity from position samples: median of the last up-to-3 consecutive
// finite differences, with per-component jumps beyond the outlier threshold
// replaced by the previously accepted value. Fewer than 3 samples gives zero.
Eigen::Vector3d estimate_velocity(const std::deque<Eigen::Vector3d>& samples,
                                  double dt, const EstimatorConfig& cfg,
                                  Eigen::Vector3d& prev_accepted);

class StateEstimator {
 public:
  StateEstimator(EstimatorConfig cfg, double dt) : cfg_(cfg), dt_(dt) {}

  // p_meas is the (possibly noisy) position sample; attitude is passed
  // through directly.
  StateVec update(const Eigen::Vector3d& p_meas, double phi, double theta);

 private:
  EstimatorConfig cfg_;
  double dt_;
  std::deque<Eigen::Vector3d> samples_;
  Eigen::Vector3d v_accepted_{Eigen::Vector3d::Zero()};
};

struct AgentRecord {
  int id{0};
  StateVec state{StateVec::Zero()};   // plant truth after integration
  InputVec input{InputVec::Zero()};
  double solve_time{0};
  double fpr{0};
  double infeasibility{0};
  double y_norm{0};
  int inner_iters{0};
  int outer_iters{0};
  bool converged{true};
  bool fallback{false};
  std::vector<int> selected_obstacles;
};

struct IntruderRecord {
  int id{0};
  Eigen::Vector3d p{Eigen::Vector3d::Zero()};
  Eigen::Vector3d v{Eigen::Vector3d::Zero()};
};

struct TickRecord {
  long tick{0};
  double time{0};
  std::vector<AgentRecord> agents;
  std::vector<IntruderRecord> intruders;
};

struct RunLog {
  std::string scenario_name;
  double control_dt{0.05};
  double solve_budget{0.04};
  std::vector<TickRecord> ticks;
};

class SimWorld {
 public:
  explicit SimWorld(const ScenarioConfig& config);

  void tick();
  void run();  // all ticks for the configured duration
  long current_tick() const { return tick_; }
  const RunLog& log() const { return log_; }
  RunLog take_log() { return std::move(log_); }
  const StateVec& truth(size_t agent_index) const;

 private:
  struct Agent {
    int id{0};
    double radius{0.4};
    StateVec truth{StateVec::Zero()};
    std::vector<ScheduleEntry> schedule;
    std::unique_ptr<NmpcController> controller;
    StateEstimator estimator;
    InputVec u_prev;
    std::optional<NmpcSolution> last_solution;
    StateVec estimate{StateVec::Zero()};
  };

  struct Intruder {
    NonCooperativeSpec spec;
    Eigen::Vector3d p{Eigen::Vector3d::Zero()};
    Eigen::Vector3d v{Eigen::Vector3d::Zero()};
  };

  ScenarioConfig cfg_;
  std::vector<Agent> agents_;
  std::vector<Intruder> intruders_;
  std::map<int, SharedTrajectory> bus_;      // broadcasts from the previous tick
  std::map<int, SharedTrajectory> staging_;  // broadcasts produced this tick
  std::mt19937_64 rng_;
  long tick_{0};
  RunLog log_;

  Eigen::Vector3d target_at(const Agent& agent, double t) const;
  void integrate_plant(Agent& agent, const InputVec& u);
  void record_initial();
  void update_intruders(double t);
};

RunLog simulate(const ScenarioConfig& config);

}  // namespace dnmpc

#endif  // DNMPC_SWARM_HPP
