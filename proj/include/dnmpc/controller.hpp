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

#ifndef DNMPC_CONTROLLER_HPP
#define DNMPC_CONTROLLER_HPP

#include <dnmpc/model.hpp>
#include <dnmpc/solver.hpp>

#include <optional>
#include <vector>

namespace dnmpc {

struct Weights {
  StateVec q_x;               // first three entries are the adaptive Q_p
  Eigen::Vector3d q_u{5, 10, 10};
  Eigen::Vector3d q_du{10, 20, 20};
  StateVec q_t;
  Eigen::Vector3d q_p_min{1, 1, 15};
  Eigen::Vector3d q_p_max{6, 6, 45};
  double b{0.01};             // adaptive scaling tuning constant

  Weights() {
    q_x << 6, 6, 45, 6, 6, 6, 8, 8;
    q_t << 40, 40, 150, 20, 20, 20, 30, 30;
  }
};

struct Setpoint {
  StateVec x_ref{StateVec::Zero()};
  InputVec u_ref{9.81, 0.0, 0.0};
};

struct ObstacleTrack {
  Eigen::Matrix3Xd centers;  // N+1 predicted center positions
  double radius{0};
  bool active{false};
  int source_id{-1};

  // Parked far below the arena with zero radius: fills a constraint slot
  // without ever activating.
  static ObstacleTrack inactive(int n_points) {
    ObstacleTrack t;
    t.centers = Eigen::Vector3d(0, 0, -1000).replicate(1, n_points);
    return t;
  }
};

struct ObstacleSet {
  std::vector<ObstacleTrack> tracks;  // exactly N_obs entries
};

struct NmpcSolution {
  InputMat u_seq;             // N inputs; col 0 is the command to apply
  StateMat predicted_states;  // rollout of u_seq from x_hat, N+1 states
  Eigen::VectorXd y_star;
  SolverOutcome outcome;
  bool fallback{false};

  InputVec applied() const { return u_seq.col(0); }
};

double stage_cost(const StateVec& x, const InputVec& u, const InputVec& u_prev,
                  const Setpoint& sp, const Weights& w);

double total_cost(const InputMat& u_seq, const StateVec& x_hat,
                  const InputVec& u_prev, const Setpoint& sp, const Weights& w,
                  const ModelParams& prm);

// Exact gradient of total_cost with respect to the stacked input sequence
// (time-major, 3 entries per step), via a backward adjoint sweep.
Eigen::VectorXd cost_gradient(const InputMat& u_seq, const StateVec& x_hat,
                              const InputVec& u_prev, const Setpoint& sp,
                              const Weights& w, const ModelParams& prm);

// Spherical obstacle constraints h = r^2 - |p_j - p_obs_j|^2 for j = 1..N,
// obstacle-major then time; h <= 0 means safe.
Eigen::VectorXd constraint_map(const InputMat& u_seq, const StateVec& x_hat,
                               const ObstacleSet& obstacles,
                               const ModelParams& prm);

// Jacobian-transpose product of constraint_map: sum_l v_l dh_l/du, computed
// by the same backward sweep the solver oracles use.
Eigen::VectorXd constraint_jtv(const InputMat& u_seq, const StateVec& x_hat,
                               const ObstacleSet& obstacles,
                               const ModelParams& prm, const Eigen::VectorXd& v);

// Q_p = Q_p_min + (Q_p_max - Q_p_min) / (sum_l W_l y_l + 1),
// W_l = b (1 - (l mod N)/N).
Eigen::Vector3d adapt_weights(const Eigen::VectorXd& y_star, const Weights& w,
                              int horizon);

struct ControllerConfig {
  ModelParams model;
  Weights weights;
  AlmSettings solver;
  InputVec u_min{5.0, -0.25, -0.25};
  InputVec u_max{12.5, 0.25, 0.25};
  int n_obs{3};
};

class NmpcController {
 public:
  explicit NmpcController(ControllerConfig cfg);

  // Builds and solves the per-tick NMPC problem. warm, when present, seeds
  // u from the shifted previous plan and y from the previous multipliers.
  // Never throws on solver trouble: non-converged outcomes carry the best
  // iterate, a non-finite oracle falls back to the shifted plan.
  NmpcSolution solve_step(const StateVec& x_hat, const InputVec& u_prev,
                          const Setpoint& sp, const ObstacleSet& obstacles,
                          const NmpcSolution* warm);

  const Eigen::Vector3d& position_weight() const { return q_p_; }
  const ControllerConfig& config() const { return cfg_; }

 private:
  ControllerConfig cfg_;
  AlmSolver alm_;
  Eigen::Vector3d q_p_;

  NmpcSolution fallback_plan(const StateVec& x_hat, const Setpoint& sp,
                             const NmpcSolution* warm) const;
};

}  // namespace dnmpc

#endif  // DNMPC_CONTROLLER_HPP
