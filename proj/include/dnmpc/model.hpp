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

#ifndef DNMPC_MODEL_HPP
#define DNMPC_MODEL_HPP

#include <Eigen/Dense>
#include <cmath>

namespace dnmpc {

// State layout: [px py pz vx vy vz phi theta]
// Input layout: [thrust phi_ref theta_ref], thrust is mass-normalized (m/s^2)
inline constexpr int kStateDim = 8;
inline constexpr int kInputDim = 3;

using StateVec = Eigen::Matrix<double, kStateDim, 1>;
using InputVec = Eigen::Matrix<double, kInputDim, 1>;
using StateMat = Eigen::Matrix<double, kStateDim, Eigen::Dynamic>;  // one state per column
using InputMat = Eigen::Matrix<double, kInputDim, Eigen::Dynamic>;  // one input per column
using StepJacX = Eigen::Matrix<double, kStateDim, kStateDim>;
using StepJacU = Eigen::Matrix<double, kStateDim, kInputDim>;

struct ModelParams {
  Eigen::Vector3d drag{0.1, 0.1, 0.2};        // A_x, A_y, A_z [1/s]
  Eigen::Vector2d attitude_gain{1.0, 1.0};    // K_phi, K_theta
  Eigen::Vector2d attitude_tau{0.5, 0.5};     // tau_phi, tau_theta [s]
  double gravity{9.81};                       // [m/s^2]
  double dt{0.05};                            // sampling time [s]
  int horizon{40};                            // N
};

inline StateVec make_state(const Eigen::Vector3d& p, const Eigen::Vector3d& v,
                           double phi, double theta) {
  StateVec x;
  x << p, v, phi, theta;
  return x;
}

inline InputVec hover_input(const ModelParams& prm) {
  return InputVec(prm.gravity, 0.0, 0.0);
}

// Body z axis in world frame for R = R_y(theta) * R_x(phi), zero yaw.
inline Eigen::Vector3d thrust_axis(double phi, double theta) {
  return {std::sin(theta) * std::cos(phi), -std::sin(phi),
          std::cos(theta) * std::cos(phi)};
}

inline StateVec continuous_dynamics(const StateVec& x, const InputVec& u,
                                    const ModelParams& prm) {
  const double phi = x(6);
  const double theta = x(7);
  StateVec dx;
  dx.head<3>() = x.segment<3>(3);
  dx.segment<3>(3) =
      u(0) * thrust_axis(phi, theta) - prm.drag.cwiseProduct(x.segment<3>(3));
  dx(5) -= prm.gravity;
  dx(6) = (prm.attitude_gain(0) * u(1) - phi) / prm.attitude_tau(0);
  dx(7) = (prm.attitude_gain(1) * u(2) - theta) / prm.attitude_tau(1);
  return dx;
}

// Forward Euler prediction step.
inline StateVec discrete_step(const StateVec& x, const InputVec& u,
                              const ModelParams& prm) {
  return x + prm.dt * continuous_dynamics(x, u, prm);
}

// Single-shooting rollout: returns u_seq.cols() + 1 states, first column = x0.
inline StateMat rollout(const StateVec& x0, const InputMat& u_seq,
                        const ModelParams& prm) {
  StateMat traj(kStateDim, u_seq.cols() + 1);
  traj.col(0) = x0;
  for (Eigen::Index j = 0; j < u_seq.cols(); ++j) {
    traj.col(j + 1) = discrete_step(traj.col(j), u_seq.col(j), prm);
  }
  return traj;
}

// Analytic Jacobians of discrete_step with respect to x and u.
inline void step_jacobians(const StateVec& x, const InputVec& u,
                           const ModelParams& prm, StepJacX& jx, StepJacU& ju) {
  const double dt = prm.dt;
  const double sph = std::sin(x(6)), cph = std::cos(x(6));
  const double sth = std::sin(x(7)), cth = std::cos(x(7));
  const double thrust = u(0);

  jx.setIdentity();
  jx.block<3, 3>(0, 3) = dt * Eigen::Matrix3d::Identity();
  jx(3, 3) -= dt * prm.drag(0);
  jx(4, 4) -= dt * prm.drag(1);
  jx(5, 5) -= dt * prm.drag(2);
  jx.block<3, 1>(3, 6) = dt * thrust * Eigen::Vector3d(-sth * sph, -cph, -cth * sph);
  jx.block<3, 1>(3, 7) = dt * thrust * Eigen::Vector3d(cth * cph, 0.0, -sth * cph);
  jx(6, 6) = 1.0 - dt / prm.attitude_tau(0);
  jx(7, 7) = 1.0 - dt / prm.attitude_tau(1);

  ju.setZero();
  ju.block<3, 1>(3, 0) = dt * Eigen::Vector3d(sth * cph, -sph, cth * cph);
  ju(6, 1) = dt * prm.attitude_gain(0) / prm.attitude_tau(0);
  ju(7, 2) = dt * prm.attitude_gain(1) / prm.attitude_tau(1);
}

}  // namespace dnmpc

#endif  // DNMPC_MODEL_HPP
