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

#include <cmath>

namespace dnmpc {

namespace {

// Shared kernels operating on a precomputed rollout so that the solver
// oracles and the standalone functions use exactly the same arithmetic.

double total_cost_on(const StateMat& traj, const InputMat& u_seq,
                     const InputVec& u_prev, const Setpoint& sp,
                     const Weights& w) {
  const Eigen::Index n_steps = u_seq.cols();
  double cost = 0;
  for (Eigen::Index j = 0; j < n_steps; ++j) {
    const StateVec dx = sp.x_ref - traj.col(j);
    const InputVec du_ref = sp.u_ref - u_seq.col(j);
    const InputVec du = u_seq.col(j) - (j == 0 ? u_prev : InputVec(u_seq.col(j - 1)));
    cost += dx.dot(w.q_x.cwiseProduct(dx));
    cost += du_ref.dot(w.q_u.cwiseProduct(du_ref));
    cost += du.dot(w.q_du.cwiseProduct(du));
  }
  const StateVec dxt = sp.x_ref - traj.col(n_steps);
  cost += dxt.dot(w.q_t.cwiseProduct(dxt));
  return cost;
}

void cost_gradient_on(const StateMat& traj, const InputMat& u_seq,
                      const std::vector<StepJacX>& jx,
                      const std::vector<StepJacU>& ju, const InputVec& u_prev,
                      const Setpoint& sp, const Weights& w,
                      Eigen::VectorXd& grad) {
  const Eigen::Index n_steps = u_seq.cols();
  grad.resize(3 * n_steps);
  Eigen::Map<InputMat> g(grad.data(), 3, n_steps);

  // lambda_j = dJ/dx_j, swept backwards from the terminal penalty.
  StateVec lambda = 2.0 * w.q_t.cwiseProduct(traj.col(n_steps) - sp.x_ref);
  for (Eigen::Index j = n_steps - 1; j >= 0; --j) {
    const InputVec u_before = j == 0 ? u_prev : InputVec(u_seq.col(j - 1));
    InputVec gu = 2.0 * w.q_u.cwiseProduct(u_seq.col(j) - sp.u_ref) +
                  2.0 * w.q_du.cwiseProduct(u_seq.col(j) - u_before);
    if (j + 1 < n_steps) {
      gu -= 2.0 * w.q_du.cwiseProduct(u_seq.col(j + 1) - u_seq.col(j));
    }
    g.col(j) = gu + ju[j].transpose() * lambda;
    if (j > 0) {
      lambda = 2.0 * w.q_x.cwiseProduct(traj.col(j) - sp.x_ref) +
               jx[j].transpose() * lambda;
    }
  }
}

void constraint_map_on(const StateMat& traj, const ObstacleSet& obstacles,
                       Eigen::VectorXd& h) {
  const Eigen::Index n_steps = traj.cols() - 1;
  const Eigen::Index n_obs = static_cast<Eigen::Index>(obstacles.tracks.size());
  h.resize(n_obs * n_steps);
  for (Eigen::Index i = 0; i < n_obs; ++i) {
    const auto& trk = obstacles.tracks[i];
    const double r2 = trk.radius * trk.radius;
    for (Eigen::Index j = 1; j <= n_steps; ++j) {
      const Eigen::Vector3d dp = traj.col(j).head<3>() - trk.centers.col(j);
      h(i * n_steps + (j - 1)) = r2 - dp.squaredNorm();
    }
  }
}

void constraint_jtv_on(const StateMat& traj, const std::vector<StepJacX>& jx,
                       const std::vector<StepJacU>& ju,
                       const ObstacleSet& obstacles,
                       const Eigen::VectorXd& w_vec, Eigen::VectorXd& out) {
  const Eigen::Index n_steps = traj.cols() - 1;
  out.resize(3 * n_steps);
  Eigen::Map<InputMat> g(out.data(), 3, n_steps);

  // mu_j = sum_l w_l dh_l/dx_j along the rollout, swept backwards.
  StateVec mu = StateVec::Zero();
  for (Eigen::Index j = n_steps; j >= 1; --j) {
    Eigen::Vector3d seed = Eigen::Vector3d::Zero();
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(obstacles.tracks.size()); ++i) {
      const double wl = w_vec(i * n_steps + (j - 1));
      if (wl != 0.0) {
        seed -= 2.0 * wl *
                (traj.col(j).head<3>() - obstacles.tracks[i].centers.col(j));
      }
    }
    mu.head<3>() += seed;
    g.col(j - 1) = ju[j - 1].transpose() * mu;
    mu = jx[j - 1].transpose() * mu;
  }
}

void step_jacobians_along(const StateMat& traj, const InputMat& u_seq,
                          const ModelParams& prm, std::vector<StepJacX>& jx,
                          std::vector<StepJacU>& ju) {
  const size_t n_steps = static_cast<size_t>(u_seq.cols());
  jx.resize(n_steps);
  ju.resize(n_steps);
  for (size_t j = 0; j < n_steps; ++j) {
    step_jacobians(traj.col(static_cast<Eigen::Index>(j)),
                   u_seq.col(static_cast<Eigen::Index>(j)), prm, jx[j], ju[j]);
  }
}

// Memoized rollout + Jacobians keyed on the flat decision vector, so the
// cost/constraint oracles share one rollout per solver query point.
struct RolloutCache {
  const ModelParams* prm{nullptr};
  StateVec x_hat;
  Eigen::VectorXd key;
  StateMat traj;
  std::vector<StepJacX> jx;
  std::vector<StepJacU> ju;
  bool jacs_valid{false};

  const StateMat& ensure(const Eigen::VectorXd& u) {
    if (key.size() != u.size() || key != u) {
      key = u;
      Eigen::Map<const InputMat> useq(u.data(), 3, u.size() / 3);
      traj = rollout(x_hat, useq, *prm);
      jacs_valid = false;
    }
    return traj;
  }

  void ensure_jacs(const Eigen::VectorXd& u) {
    ensure(u);
    if (!jacs_valid) {
      Eigen::Map<const InputMat> useq(u.data(), 3, u.size() / 3);
      step_jacobians_along(traj, useq, *prm, jx, ju);
      jacs_valid = true;
    }
  }
};

}  // namespace

double stage_cost(const StateVec& x, const InputVec& u, const InputVec& u_prev,
                  const Setpoint& sp, const Weights& w) {
  const StateVec dx = sp.x_ref - x;
  const InputVec du_ref = sp.u_ref - u;
  const InputVec du = u - u_prev;
  return dx.dot(w.q_x.cwiseProduct(dx)) + du_ref.dot(w.q_u.cwiseProduct(du_ref)) +
         du.dot(w.q_du.cwiseProduct(du));
}

double total_cost(const InputMat& u_seq, const StateVec& x_hat,
                  const InputVec& u_prev, const Setpoint& sp, const Weights& w,
                  const ModelParams& prm) {
  return total_cost_on(rollout(x_hat, u_seq, prm), u_seq, u_prev, sp, w);
}

Eigen::VectorXd cost_gradient(const InputMat& u_seq, const StateVec& x_hat,
                              const InputVec& u_prev, const Setpoint& sp,
                              const Weights& w, const ModelParams& prm) {
  const StateMat traj = rollout(x_hat, u_seq, prm);
  std::vector<StepJacX> jx;
  std::vector<StepJacU> ju;
  step_jacobians_along(traj, u_seq, prm, jx, ju);
  Eigen::VectorXd grad;
  cost_gradient_on(traj, u_seq, jx, ju, u_prev, sp, w, grad);
  return grad;
}

Eigen::VectorXd constraint_map(const InputMat& u_seq, const StateVec& x_hat,
                               const ObstacleSet& obstacles,
                               const ModelParams& prm) {
  Eigen::VectorXd h;
  constraint_map_on(rollout(x_hat, u_seq, prm), obstacles, h);
  return h;
}

Eigen::VectorXd constraint_jtv(const InputMat& u_seq, const StateVec& x_hat,
                               const ObstacleSet& obstacles,
                               const ModelParams& prm,
                               const Eigen::VectorXd& v) {
  const StateMat traj = rollout(x_hat, u_seq, prm);
  std::vector<StepJacX> jx;
  std::vector<StepJacU> ju;
  step_jacobians_along(traj, u_seq, prm, jx, ju);
  Eigen::VectorXd out;
  constraint_jtv_on(traj, jx, ju, obstacles, v, out);
  return out;
}

Eigen::Vector3d adapt_weights(const Eigen::VectorXd& y_star, const Weights& w,
                              int horizon) {
  double denom = 1.0;
  for (Eigen::Index l = 0; l < y_star.size(); ++l) {
    const double wl = w.b * (1.0 - static_cast<double>(l % horizon) / horizon);
    denom += wl * y_star(l);
  }
  return w.q_p_min + (w.q_p_max - w.q_p_min) / denom;
}

NmpcController::NmpcController(ControllerConfig cfg)
    : cfg_(std::move(cfg)), alm_(cfg_.solver), q_p_(cfg_.weights.q_p_max) {}

NmpcSolution NmpcController::fallback_plan(const StateVec& x_hat,
                                           const Setpoint& sp,
                                           const NmpcSolution* warm) const {
  const int n_steps = cfg_.model.horizon;
  NmpcSolution sol;
  if (warm != nullptr && warm->u_seq.cols() == n_steps) {
    sol.u_seq = warm->u_seq;
    sol.u_seq.leftCols(n_steps - 1) = warm->u_seq.rightCols(n_steps - 1);
  } else {
    sol.u_seq = sp.u_ref.replicate(1, n_steps);
  }
  for (Eigen::Index j = 0; j < n_steps; ++j) {
    sol.u_seq.col(j) = sol.u_seq.col(j).cwiseMax(cfg_.u_min).cwiseMin(cfg_.u_max);
  }
  sol.predicted_states = rollout(x_hat, sol.u_seq, cfg_.model);
  sol.y_star = Eigen::VectorXd::Zero(n_steps * cfg_.n_obs);
  sol.fallback = true;
  return sol;
}

NmpcSolution NmpcController::solve_step(const StateVec& x_hat,
                                        const InputVec& u_prev,
                                        const Setpoint& sp,
                                        const ObstacleSet& obstacles,
                                        const NmpcSolution* warm) {
  const int n_steps = cfg_.model.horizon;
  const int n = 3 * n_steps;
  const int m = n_steps * cfg_.n_obs;

  Weights w = cfg_.weights;
  w.q_x.head<3>() = q_p_;

  RolloutCache cache;
  cache.prm = &cfg_.model;
  cache.x_hat = x_hat;

  ParametricProblem prob;
  prob.n = n;
  prob.m = m;
  prob.box.lower = cfg_.u_min.replicate(n_steps, 1);
  prob.box.upper = cfg_.u_max.replicate(n_steps, 1);
  prob.cost = [&](const Eigen::VectorXd& u) {
    const StateMat& traj = cache.ensure(u);
    Eigen::Map<const InputMat> useq(u.data(), 3, n_steps);
    return total_cost_on(traj, useq, u_prev, sp, w);
  };
  prob.cost_grad = [&](const Eigen::VectorXd& u, Eigen::VectorXd& g) {
    cache.ensure_jacs(u);
    Eigen::Map<const InputMat> useq(u.data(), 3, n_steps);
    cost_gradient_on(cache.traj, useq, cache.jx, cache.ju, u_prev, sp, w, g);
  };
  prob.cmap = [&](const Eigen::VectorXd& u, Eigen::VectorXd& h) {
    constraint_map_on(cache.ensure(u), obstacles, h);
  };
  prob.cmap_jtv = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& wv,
                      Eigen::VectorXd& out) {
    cache.ensure_jacs(u);
    constraint_jtv_on(cache.traj, cache.jx, cache.ju, obstacles, wv, out);
  };

  Eigen::VectorXd u0(n);
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(m);
  if (warm != nullptr && warm->u_seq.cols() == n_steps) {
    Eigen::Map<InputMat> u0m(u0.data(), 3, n_steps);
    u0m.leftCols(n_steps - 1) = warm->u_seq.rightCols(n_steps - 1);
    u0m.col(n_steps - 1) = warm->u_seq.col(n_steps - 1);
    if (warm->y_star.size() == m) y0 = warm->y_star;
  } else {
    Eigen::Map<InputMat>(u0.data(), 3, n_steps) = sp.u_ref.replicate(1, n_steps);
  }

  NmpcSolution sol;
  try {
    SolverOutcome outcome = alm_.solve(prob, std::move(u0), std::move(y0));
    sol.u_seq = Eigen::Map<const InputMat>(outcome.u_star.data(), 3, n_steps);
    sol.predicted_states = rollout(x_hat, sol.u_seq, cfg_.model);
    sol.y_star = outcome.y_star;
    sol.outcome = std::move(outcome);
  } catch (const NonFiniteOracle&) {
    sol = fallback_plan(x_hat, sp, warm);
  }
  q_p_ = adapt_weights(sol.y_star, cfg_.weights, n_steps);
  return sol;
}

}  // namespace dnmpc
