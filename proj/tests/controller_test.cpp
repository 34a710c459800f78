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

#include <dnmpc/controller.hpp>

#include <doctest.h>

#include <random>

using namespace dnmpc;

namespace {

InputMat random_inputs(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> thrust(6.0, 12.0);
  std::uniform_real_distribution<double> att(-0.2, 0.2);
  InputMat u(3, n);
  for (int j = 0; j < n; ++j) u.col(j) = InputVec{thrust(rng), att(rng), att(rng)};
  return u;
}

ObstacleSet static_obstacle(const Eigen::Vector3d& center, double radius,
                            int n_points, int n_slots) {
  ObstacleSet set;
  ObstacleTrack trk;
  trk.centers = center.replicate(1, n_points);
  trk.radius = radius;
  trk.active = true;
  trk.source_id = 1;
  set.tracks.push_back(trk);
  for (int i = 1; i < n_slots; ++i) {
    set.tracks.push_back(ObstacleTrack::inactive(n_points));
  }
  return set;
}

}  // namespace

TEST_CASE("stage_cost: hand-evaluated terms") {
  Weights w;
  Setpoint sp;
  sp.x_ref = make_state({0, 0, 1}, Eigen::Vector3d::Zero(), 0, 0);

  // exact tracking costs nothing
  const StateVec x = sp.x_ref;
  CHECK(stage_cost(x, sp.u_ref, sp.u_ref, sp, w) == doctest::Approx(0.0));

  // unit z deviation with Q_p,min z-weight
  w.q_x.head<3>() = w.q_p_min;
  StateVec x_off = sp.x_ref;
  x_off(2) += 1.0;
  CHECK(stage_cost(x_off, sp.u_ref, sp.u_ref, sp, w) == doctest::Approx(15.0));

  // input-change term: du = (0, 0.1, 0), Q_du = (10,20,20) -> 0.2
  InputVec u = sp.u_ref;
  u(1) += 0.1;
  const double full = stage_cost(sp.x_ref, u, sp.u_ref, sp, w);
  const double input_only = w.q_u(1) * 0.01;  // deviation from u_ref
  CHECK(full - input_only == doctest::Approx(0.2));
}

TEST_CASE("total_cost: hover at the setpoint is exactly zero") {
  ModelParams prm;
  Weights w;
  Setpoint sp;
  sp.x_ref = make_state({1, 2, 3}, Eigen::Vector3d::Zero(), 0, 0);
  const InputMat u = sp.u_ref.replicate(1, prm.horizon);
  CHECK(total_cost(u, sp.x_ref, sp.u_ref, sp, w, prm) == doctest::Approx(0.0));
}

TEST_CASE("total_cost: N = 1 is stage cost plus terminal term") {
  ModelParams prm;
  prm.horizon = 1;
  Weights w;
  Setpoint sp;
  sp.x_ref = make_state({0.5, 0, 1}, Eigen::Vector3d::Zero(), 0, 0);
  std::mt19937_64 rng(3);
  const InputMat u = random_inputs(rng, 1);
  const StateVec x0 = make_state({0, 0, 1}, {0.2, 0, 0}, 0.05, -0.02);
  const InputVec u_prev{9.0, 0.01, 0.0};

  const StateVec x1 = discrete_step(x0, u.col(0), prm);
  const StateVec dxt = sp.x_ref - x1;
  const double expected = stage_cost(x0, u.col(0), u_prev, sp, w) +
                          dxt.dot(w.q_t.cwiseProduct(dxt));
  CHECK(total_cost(u, x0, u_prev, sp, w, prm) == doctest::Approx(expected));
}

TEST_CASE("total_cost: matches an independent re-summation on short horizons") {
  Weights w;
  Setpoint sp;
  sp.x_ref = make_state({1, -1, 2}, Eigen::Vector3d::Zero(), 0, 0);
  std::mt19937_64 rng(5);
  for (int n = 1; n <= 3; ++n) {
    ModelParams prm;
    prm.horizon = n;
    const InputMat u = random_inputs(rng, n);
    const StateVec x0 = make_state({0, 0, 1}, {0.1, -0.1, 0}, 0.0, 0.1);
    const InputVec u_prev{8.0, -0.05, 0.1};

    // independent oracle: explicit state recursion and term-by-term sums
    double expected = 0;
    StateVec x = x0;
    InputVec prev = u_prev;
    for (int j = 0; j < n; ++j) {
      const StateVec dx = sp.x_ref - x;
      const InputVec du_ref = sp.u_ref - u.col(j);
      const InputVec du = u.col(j) - prev;
      for (int i = 0; i < kStateDim; ++i) expected += w.q_x(i) * dx(i) * dx(i);
      for (int i = 0; i < kInputDim; ++i) expected += w.q_u(i) * du_ref(i) * du_ref(i);
      for (int i = 0; i < kInputDim; ++i) expected += w.q_du(i) * du(i) * du(i);
      prev = u.col(j);
      x = discrete_step(x, u.col(j), prm);
    }
    const StateVec dxt = sp.x_ref - x;
    for (int i = 0; i < kStateDim; ++i) expected += w.q_t(i) * dxt(i) * dxt(i);

    CHECK(total_cost(u, x0, u_prev, sp, w, prm) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("cost_gradient: zero at the hover minimizer") {
  ModelParams prm;
  Weights w;
  Setpoint sp;
  sp.x_ref = make_state({0, 0, 1}, Eigen::Vector3d::Zero(), 0, 0);
  const InputMat u = sp.u_ref.replicate(1, prm.horizon);
  const Eigen::VectorXd g = cost_gradient(u, sp.x_ref, sp.u_ref, sp, w, prm);
  CHECK(g.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("cost_gradient: matches central finite differences") {
  ModelParams prm;
  prm.horizon = 10;
  Weights w;
  Setpoint sp;
  sp.x_ref = make_state({1, 0.5, 1.5}, Eigen::Vector3d::Zero(), 0, 0);
  std::mt19937_64 rng(7);
  const double h = 1e-6;

  for (int trial = 0; trial < 20; ++trial) {
    InputMat u = random_inputs(rng, prm.horizon);
    const StateVec x0 = make_state({0, 0, 1}, {0.1, 0, -0.1}, 0.02, -0.03);
    const InputVec u_prev{9.81, 0, 0};
    const Eigen::VectorXd g = cost_gradient(u, x0, u_prev, sp, w, prm);
    const double scale = 1.0 + g.cwiseAbs().maxCoeff();

    Eigen::Map<Eigen::VectorXd> flat(u.data(), u.size());
    for (int i = 0; i < flat.size(); ++i) {
      const double orig = flat(i);
      flat(i) = orig + h;
      const double fp = total_cost(u, x0, u_prev, sp, w, prm);
      flat(i) = orig - h;
      const double fm = total_cost(u, x0, u_prev, sp, w, prm);
      flat(i) = orig;
      CHECK(std::abs((fp - fm) / (2 * h) - g(i)) / scale < 1e-5);
    }
  }
}

TEST_CASE("cost_gradient: input-only closed form when state weights vanish") {
  ModelParams prm;
  prm.horizon = 4;
  Weights w;
  w.q_x.setZero();
  w.q_t.setZero();
  Setpoint sp;
  std::mt19937_64 rng(9);
  const InputMat u = random_inputs(rng, prm.horizon);
  const InputVec u_prev{8.5, 0.02, -0.01};
  const Eigen::VectorXd g =
      cost_gradient(u, StateVec::Zero(), u_prev, sp, w, prm);

  for (int j = 0; j < prm.horizon; ++j) {
    const InputVec before = j == 0 ? u_prev : InputVec(u.col(j - 1));
    InputVec expected = 2.0 * w.q_u.cwiseProduct(u.col(j) - sp.u_ref) +
                        2.0 * w.q_du.cwiseProduct(u.col(j) - before);
    if (j + 1 < prm.horizon) {
      expected -= 2.0 * w.q_du.cwiseProduct(u.col(j + 1) - u.col(j));
    }
    CHECK((g.segment<3>(3 * j) - expected).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("constraint_map: hand cases and ordering") {
  ModelParams prm;
  prm.horizon = 5;
  const StateVec x0 = make_state({0, 0, 1}, Eigen::Vector3d::Zero(), 0, 0);
  const InputMat u = hover_input(prm).replicate(1, prm.horizon);

  SUBCASE("far obstacle: all entries negative") {
    const auto set = static_obstacle({50, 0, 1}, 0.4, prm.horizon + 1, 3);
    const Eigen::VectorXd h = constraint_map(u, x0, set, prm);
    REQUIRE(h.size() == 3 * prm.horizon);
    CHECK(h.maxCoeff() < 0.0);
  }
  SUBCASE("obstacle at the hover point: h = r^2 everywhere") {
    const auto set = static_obstacle({0, 0, 1}, 0.4, prm.horizon + 1, 3);
    const Eigen::VectorXd h = constraint_map(u, x0, set, prm);
    for (int j = 0; j < prm.horizon; ++j) {
      CHECK(h(j) == doctest::Approx(0.16));
    }
  }
  SUBCASE("inactive pads are hugely negative") {
    const auto set = static_obstacle({50, 0, 1}, 0.4, prm.horizon + 1, 3);
    const Eigen::VectorXd h = constraint_map(u, x0, set, prm);
    // slots 1 and 2 are inactive pads at z = -1000
    CHECK(h.segment(prm.horizon, 2 * prm.horizon).maxCoeff() < -1e5);
  }
}

TEST_CASE("adapt_weights: limits and hand case") {
  Weights w;
  const int n = 40;

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3 * n);
  CHECK((adapt_weights(zero, w, n) - w.q_p_max).norm() == doctest::Approx(0.0));

  const Eigen::VectorXd huge = Eigen::VectorXd::Constant(3 * n, 1e12);
  CHECK((adapt_weights(huge, w, n) - w.q_p_min).norm() < 1e-6);

  // single y_0 = 100 with b = 0.01: denominator 2, midpoint weights
  Eigen::VectorXd y = Eigen::VectorXd::Zero(3 * n);
  y(0) = 100.0;
  const Eigen::Vector3d qp = adapt_weights(y, w, n);
  CHECK(qp(0) == doctest::Approx(3.5));
  CHECK(qp(1) == doctest::Approx(3.5));
  CHECK(qp(2) == doctest::Approx(30.0));
}

TEST_CASE("adapt_weights: bounded and monotone along rays") {
  Weights w;
  const int n = 10;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(0.0, 50.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd y0(3 * n);
    for (int i = 0; i < y0.size(); ++i) y0(i) = dist(rng);
    Eigen::Vector3d prev = adapt_weights(Eigen::VectorXd::Zero(3 * n), w, n);
    CHECK((prev - w.q_p_max).norm() < 1e-12);
    for (double t : {0.1, 0.5, 1.0, 3.0, 10.0}) {
      const Eigen::Vector3d qp = adapt_weights(t * y0, w, n);
      CHECK((qp.array() <= prev.array() + 1e-12).all());
      CHECK((qp.array() >= w.q_p_min.array() - 1e-12).all());
      CHECK((qp.array() <= w.q_p_max.array() + 1e-12).all());
      prev = qp;
    }
  }
}

TEST_CASE("solve_step: hover at the setpoint applies hover thrust") {
  ControllerConfig cfg;
  cfg.solver.time_budget = 0;
  cfg.solver.max_inner_iters = 0;
  NmpcController ctrl(cfg);
  Setpoint sp;
  sp.x_ref = make_state({0, 0, 1}, Eigen::Vector3d::Zero(), 0, 0);
  ObstacleSet obstacles;
  for (int i = 0; i < cfg.n_obs; ++i) {
    obstacles.tracks.push_back(ObstacleTrack::inactive(cfg.model.horizon + 1));
  }
  const NmpcSolution sol =
      ctrl.solve_step(sp.x_ref, sp.u_ref, sp, obstacles, nullptr);
  CHECK_FALSE(sol.fallback);
  CHECK((sol.applied() - InputVec{9.81, 0, 0}).lpNorm<Eigen::Infinity>() < 1e-3);
  CHECK(sol.outcome.status == SolveStatus::Converged);
  // predicted states are the rollout of the returned plan
  const StateMat expected = rollout(sp.x_ref, sol.u_seq, cfg.model);
  CHECK((sol.predicted_states - expected).norm() == doctest::Approx(0.0));
}

TEST_CASE("solve_step: cold start converges on obstacle-free tracking") {
  ControllerConfig cfg;
  cfg.solver.time_budget = 0;
  cfg.solver.max_inner_iters = 0;
  NmpcController ctrl(cfg);
  Setpoint sp;
  sp.x_ref = make_state({2, 0, 1}, Eigen::Vector3d::Zero(), 0, 0);
  ObstacleSet obstacles;
  for (int i = 0; i < cfg.n_obs; ++i) {
    obstacles.tracks.push_back(ObstacleTrack::inactive(cfg.model.horizon + 1));
  }
  const StateVec x0 = make_state({0, 0, 1}, Eigen::Vector3d::Zero(), 0, 0);
  const NmpcSolution sol = ctrl.solve_step(x0, sp.u_ref, sp, obstacles, nullptr);
  CHECK(sol.outcome.status == SolveStatus::Converged);
  // plan makes progress toward the target
  CHECK(sol.predicted_states.col(cfg.model.horizon)(0) > 0.5);
}

TEST_CASE("solve_step: static obstacle between start and target is respected") {
  ControllerConfig cfg;
  cfg.solver.time_budget = 0;
  cfg.solver.max_inner_iters = 0;
  NmpcController ctrl(cfg);
  Setpoint sp;
  sp.x_ref = make_state({3, 0, 1}, Eigen::Vector3d::Zero(), 0, 0);
  const StateVec x0 = make_state({0, 0, 1}, Eigen::Vector3d::Zero(), 0, 0);
  const auto obstacles =
      static_obstacle({1.0, 0, 1}, 0.4, cfg.model.horizon + 1, cfg.n_obs);

  const NmpcSolution* warm = nullptr;
  NmpcSolution sol;
  for (int k = 0; k < 3; ++k) {  // a few re-solves as the controller would
    sol = ctrl.solve_step(x0, hover_input(cfg.model), sp, obstacles, warm);
    warm = &sol;
  }
  CHECK(sol.outcome.status == SolveStatus::Converged);
  const Eigen::VectorXd h = constraint_map(sol.u_seq, x0, obstacles, cfg.model);
  CHECK(h.maxCoeff() <= cfg.solver.delta + 1e-9);

  // applied input within bounds
  CHECK((sol.applied().array() >= cfg.u_min.array() - 1e-12).all());
  CHECK((sol.applied().array() <= cfg.u_max.array() + 1e-12).all());
}

TEST_CASE("solve_step: warm start is no slower on an unchanged problem") {
  ControllerConfig cfg;
  cfg.solver.time_budget = 0;
  cfg.solver.max_inner_iters = 0;
  Setpoint sp;
  sp.x_ref = make_state({2, 1, 1}, Eigen::Vector3d::Zero(), 0, 0);
  const StateVec x0 = make_state({0, 0, 1}, Eigen::Vector3d::Zero(), 0, 0);
  ObstacleSet obstacles;
  for (int i = 0; i < cfg.n_obs; ++i) {
    obstacles.tracks.push_back(ObstacleTrack::inactive(cfg.model.horizon + 1));
  }

  std::vector<int> cold_iters, warm_iters;
  for (int trial = 0; trial < 5; ++trial) {
    NmpcController ctrl(cfg);
    const NmpcSolution cold =
        ctrl.solve_step(x0, hover_input(cfg.model), sp, obstacles, nullptr);
    const NmpcSolution warm =
        ctrl.solve_step(x0, hover_input(cfg.model), sp, obstacles, &cold);
    cold_iters.push_back(cold.outcome.inner_iters_total);
    warm_iters.push_back(warm.outcome.inner_iters_total);
  }
  std::sort(cold_iters.begin(), cold_iters.end());
  std::sort(warm_iters.begin(), warm_iters.end());
  CHECK(warm_iters[2] <= cold_iters[2]);  // medians
}

TEST_CASE("solve_step: non-finite oracle falls back to the shifted plan") {
  ControllerConfig cfg;
  cfg.solver.time_budget = 0;
  cfg.solver.max_inner_iters = 0;
  NmpcController ctrl(cfg);
  Setpoint sp;
  sp.x_ref = make_state({0, 0, 1}, Eigen::Vector3d::Zero(), 0, 0);
  ObstacleSet obstacles;
  for (int i = 0; i < cfg.n_obs; ++i) {
    obstacles.tracks.push_back(ObstacleTrack::inactive(cfg.model.horizon + 1));
  }
  StateVec bad = sp.x_ref;
  bad(0) = std::numeric_limits<double>::quiet_NaN();
  const NmpcSolution sol =
      ctrl.solve_step(bad, sp.u_ref, sp, obstacles, nullptr);
  CHECK(sol.fallback);
  CHECK(sol.u_seq.allFinite());
  CHECK((sol.applied().array() >= cfg.u_min.array()).all());
  CHECK((sol.applied().array() <= cfg.u_max.array()).all());
}
