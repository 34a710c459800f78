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

#ifndef DNMPC_PRIORITY_HPP
#define DNMPC_PRIORITY_HPP

#include <dnmpc/controller.hpp>
#include <dnmpc/model.hpp>

#include <stdexcept>
#include <vector>

namespace dnmpc {

// An agent's broadcast: its previous NMPC input plan plus the current
// measured state, from which receivers reconstruct the predicted track.
struct SharedTrajectory {
  int agent_id{-1};
  StateVec measured_state{StateVec::Zero()};
  InputMat input_seq;  // N inputs
  double radius{0.4};
  long stamp{0};       // tick index at which it was produced
};

struct PriorityParams {
  double d_s{0.2};     // safety margin [m]
  double a{0.7};       // time-decay exponent
  double big_m{1e6};   // current-violation dominance constant
  int n_obs{3};
  int horizon{40};
};

struct PredictedTrack {
  int agent_id{-1};
  double radius{0.4};
  Eigen::Matrix3Xd positions;   // N+1 samples
  Eigen::Matrix3Xd velocities;  // N+1 samples
};

struct StaleTrajectory : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Re-anchors the sender's previous input plan at its current measured state
// and rolls the prediction model forward. Throws StaleTrajectory when the
// broadcast is older than one tick; callers substitute a constant-velocity
// prediction in that case.
PredictedTrack predict_track(const SharedTrajectory& shared,
                             const ModelParams& prm, long current_tick);

// Per-candidate danger score: for every horizon sample, overlap at j = 0
// adds big_m, proximity within radius + d_s adds
// (1 - d/(r + d_s))^2 |v| N/(j+1)^a.
std::vector<double> priority_weights(const Eigen::Matrix3Xd& ego_positions,
                                     const std::vector<PredictedTrack>& others,
                                     const PriorityParams& params);

// Top n_obs candidates by weight (descending, ties by ascending agent_id),
// zero-weight candidates used only to fill spare slots, inactive pads after.
ObstacleSet select_obstacles(const std::vector<double>& weights,
                             const std::vector<PredictedTrack>& others,
                             const PriorityParams& params);

}  // namespace dnmpc

#endif  // DNMPC_PRIORITY_HPP
