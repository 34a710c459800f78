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

#include <dnmpc/model.hpp>

#include <doctest.h>

#include <random>

using namespace dnmpc;

namespace {

StateVec random_state(std::mt19937_64& rng, double attitude_range = 0.25) {
  std::uniform_real_distribution<double> pos(-2.0, 2.0);
  std::uniform_real_distribution<double> vel(-1.5, 1.5);
  std::uniform_real_distribution<double> att(-attitude_range, attitude_range);
  return make_state({pos(rng), pos(rng), pos(rng)}, {vel(rng), vel(rng), vel(rng)},
                    att(rng), att(rng));
}

InputVec random_input(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> thrust(5.0, 12.5);
  std::uniform_real_distribution<double> att(-0.25, 0.25);
  return {thrust(rng), att(rng), att(rng)};
}

}  // namespace

TEST_CASE("continuous dynamics: hover equilibrium has zero derivative") {
  ModelParams prm;
  const StateVec x = make_state({1.3, -0.4, 2.0}, Eigen::Vector3d::Zero(), 0, 0);
  const StateVec dx = continuous_dynamics(x, hover_input(prm), prm);
  CHECK(dx.norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("continuous dynamics: drag decelerates forward flight") {
  ModelParams prm;
  const StateVec x = make_state(Eigen::Vector3d::Zero(), {1, 0, 0}, 0, 0);
  const StateVec dx = continuous_dynamics(x, hover_input(prm), prm);
  CHECK(dx(3) == doctest::Approx(-0.1));
  CHECK(dx(4) == doctest::Approx(0.0));
  CHECK(dx(5) == doctest::Approx(0.0));
}

TEST_CASE("continuous dynamics: roll reference first-order response") {
  ModelParams prm;
  const StateVec x = StateVec::Zero();
  const InputVec u{9.81, 0.25, 0.0};
  const StateVec dx = continuous_dynamics(x, u, prm);
  CHECK(dx(6) == doctest::Approx(0.5));  // (1*0.25 - 0)/0.5
  CHECK(dx(7) == doctest::Approx(0.0));
}

TEST_CASE("discrete step: hover is an exact fixed point") {
  ModelParams prm;
  const StateVec x = make_state({0.2, 5.0, 1.1}, Eigen::Vector3d::Zero(), 0, 0);
  const StateVec x_next = discrete_step(x, hover_input(prm), prm);
  CHECK((x_next - x).norm() == 0.0);
}

TEST_CASE("discrete step: one Euler step by hand") {
  ModelParams prm;
  const StateVec x = make_state({0, 0, 0}, {1, 0, 0}, 0, 0);
  const StateVec x_next = discrete_step(x, hover_input(prm), prm);
  CHECK(x_next(0) == doctest::Approx(0.05));
  CHECK(x_next(3) == doctest::Approx(0.995));

  StateVec x2 = StateVec::Zero();
  const InputVec u{9.81, 0.25, 0.0};
  CHECK(discrete_step(x2, u, prm)(6) == doctest::Approx(0.025));
}

TEST_CASE("rollout: hover sequence stays put, N=1 equals discrete_step") {
  ModelParams prm;
  const StateVec x0 = make_state({1, 2, 3}, Eigen::Vector3d::Zero(), 0, 0);
  const InputMat hover = hover_input(prm).replicate(1, 5);
  const StateMat traj = rollout(x0, hover, prm);
  REQUIRE(traj.cols() == 6);
  for (int j = 0; j <= 5; ++j) CHECK((traj.col(j) - x0).norm() == 0.0);

  std::mt19937_64 rng(7);
  const StateVec xr = random_state(rng);
  const InputMat u1 = random_input(rng);
  CHECK((rollout(xr, u1, prm).col(1) - discrete_step(xr, u1.col(0), prm)).norm() == 0.0);
}

TEST_CASE("rollout: matches manual composition of discrete steps") {
  ModelParams prm;
  std::mt19937_64 rng(11);
  const StateVec x0 = random_state(rng);
  InputMat u(3, 2);
  u.col(0) = InputVec{11.0, 0.0, 0.0};
  u.col(1) = random_input(rng);
  const StateMat traj = rollout(x0, u, prm);
  const StateVec x1 = discrete_step(x0, u.col(0), prm);
  const StateVec x2 = discrete_step(x1, u.col(1), prm);
  CHECK((traj.col(1) - x1).norm() == 0.0);
  CHECK((traj.col(2) - x2).norm() == 0.0);
}

TEST_CASE("rollout: composition property over random split points") {
  ModelParams prm;
  std::mt19937_64 rng(13);
  const int n = 8;
  for (int trial = 0; trial < 20; ++trial) {
    const StateVec x0 = random_state(rng);
    InputMat u(3, n);
    for (int j = 0; j < n; ++j) u.col(j) = random_input(rng);
    const StateMat traj = rollout(x0, u, prm);
    std::uniform_int_distribution<int> pick(0, n);
    int i = pick(rng), j = pick(rng);
    if (i > j) std::swap(i, j);
    const StateMat tail = rollout(traj.col(i), u.rightCols(n - i), prm);
    CHECK((tail.col(j - i) - traj.col(j)).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("step jacobians: structural entries") {
  ModelParams prm;
  std::mt19937_64 rng(17);
  const StateVec x = random_state(rng);
  const InputVec u = random_input(rng);
  StepJacX jx;
  StepJacU ju;
  step_jacobians(x, u, prm, jx, ju);
  CHECK((jx.block<3, 3>(0, 3) - 0.05 * Eigen::Matrix3d::Identity()).norm() == 0.0);
  CHECK(jx(6, 6) == doctest::Approx(0.9));  // 1 - dt/tau_phi
  CHECK(jx(7, 7) == doctest::Approx(0.9));
}

TEST_CASE("step jacobians: agree with central finite differences") {
  ModelParams prm;
  std::mt19937_64 rng(19);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const StateVec x = random_state(rng);
    const InputVec u = random_input(rng);
    StepJacX jx;
    StepJacU ju;
    step_jacobians(x, u, prm, jx, ju);
    const double scale = 1.0 + jx.cwiseAbs().maxCoeff();
    for (int c = 0; c < kStateDim; ++c) {
      StateVec xp = x, xm = x;
      xp(c) += h;
      xm(c) -= h;
      const StateVec col =
          (discrete_step(xp, u, prm) - discrete_step(xm, u, prm)) / (2 * h);
      CHECK((col - jx.col(c)).cwiseAbs().maxCoeff() / scale < 1e-5);
    }
    for (int c = 0; c < kInputDim; ++c) {
      InputVec up = u, um = u;
      up(c) += h;
      um(c) -= h;
      const StateVec col =
          (discrete_step(x, up, prm) - discrete_step(x, um, prm)) / (2 * h);
      CHECK((col - ju.col(c)).cwiseAbs().maxCoeff() / scale < 1e-5);
    }
  }
}

TEST_CASE("dynamics: attitude rows decouple from translation and each other") {
  ModelParams prm;
  std::mt19937_64 rng(23);
  const StateVec x = random_state(rng);
  const InputVec u = random_input(rng);

  StateVec x2 = x;
  x2.head<6>().setRandom();
  const StateVec d1 = continuous_dynamics(x, u, prm);
  const StateVec d2 = continuous_dynamics(x2, u, prm);
  CHECK(d1(6) == d2(6));
  CHECK(d1(7) == d2(7));

  InputVec u2 = u;
  u2(0) += 1.0;
  u2(2) += 0.1;  // theta_ref must not affect phi row
  const StateVec d3 = continuous_dynamics(x, u2, prm);
  CHECK(d1(6) == d3(6));
}
