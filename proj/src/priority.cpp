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

#include <dnmpc/priority.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dnmpc {

PredictedTrack predict_track(const SharedTrajectory& shared,
                             const ModelParams& prm, long current_tick) {
  const long lag = current_tick - shared.stamp;
  if (lag > 1 || lag < 0) {
    throw StaleTrajectory("shared trajectory from agent " +
                          std::to_string(shared.agent_id) + " is stale");
  }
  // The broadcast anchors at the sender's state one tick ago; extend the
  // plan by repeating its last input and drop the leading samples so that
  // column j lines up with the receiver's prediction time t + j dt.
  const Eigen::Index n = shared.input_seq.cols();
  InputMat inputs(3, n + lag);
  inputs.leftCols(n) = shared.input_seq;
  for (long k = 0; k < lag; ++k) inputs.col(n + k) = shared.input_seq.col(n - 1);
  const StateMat traj = rollout(shared.measured_state, inputs, prm);
  PredictedTrack track;
  track.agent_id = shared.agent_id;
  track.radius = shared.radius;
  track.positions = traj.topRows<3>().rightCols(traj.cols() - lag);
  track.velocities = traj.middleRows<3>(3).rightCols(traj.cols() - lag);
  return track;
}

std::vector<double> priority_weights(const Eigen::Matrix3Xd& ego_positions,
                                     const std::vector<PredictedTrack>& others,
                                     const PriorityParams& params) {
  const Eigen::Index n_samples = ego_positions.cols();
  const double n_horizon = static_cast<double>(params.horizon);
  std::vector<double> weights(others.size(), 0.0);
  for (size_t i = 0; i < others.size(); ++i) {
    const auto& trk = others[i];
    const double reach = trk.radius + params.d_s;
    double w = 0;
    for (Eigen::Index j = 0; j < n_samples; ++j) {
      const double d = (ego_positions.col(j) - trk.positions.col(j)).norm();
      if (j == 0 && d <= trk.radius) {
        w += params.big_m;
      } else if (d <= reach) {
        const double alpha =
            std::pow(1.0 - d / reach, 2) * trk.velocities.col(j).norm();
        w += alpha * n_horizon / std::pow(static_cast<double>(j) + 1.0, params.a);
      }
    }
    weights[i] = w;
  }
  return weights;
}

ObstacleSet select_obstacles(const std::vector<double>& weights,
                             const std::vector<PredictedTrack>& others,
                             const PriorityParams& params) {
  std::vector<size_t> order(others.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (weights[a] != weights[b]) return weights[a] > weights[b];
    return others[a].agent_id < others[b].agent_id;
  });

  ObstacleSet set;
  set.tracks.reserve(static_cast<size_t>(params.n_obs));
  for (int slot = 0; slot < params.n_obs; ++slot) {
    if (slot < static_cast<int>(order.size())) {
      const auto& trk = others[order[static_cast<size_t>(slot)]];
      ObstacleTrack out;
      out.centers = trk.positions;
      out.radius = trk.radius;
      out.active = true;
      out.source_id = trk.agent_id;
      set.tracks.push_back(std::move(out));
    } else {
      set.tracks.push_back(ObstacleTrack::inactive(params.horizon + 1));
    }
  }
  return set;
}

}  // namespace dnmpc
