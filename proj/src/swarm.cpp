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

#include <dnmpc/swarm.hpp>

#include <algorithm>
#include <cmath>

namespace dnmpc {

Eigen::Matrix3Xd constant_velocity_predict(const Eigen::Vector3d& p,
                                           const Eigen::Vector3d& v, int n,
                                           double dt) {
  Eigen::Matrix3Xd out(3, n + 1);
  for (int j = 0; j <= n; ++j) out.col(j) = p + (j * dt) * v;
  return out;
}

Eigen::Vector3d estimate_velocity(const std::deque<Eigen::Vector3d>& samples,
                                  double dt, const EstimatorConfig& cfg,
                                  Eigen::Vector3d& prev_accepted) {
  if (samples.size() < 3) return Eigen::Vector3d::Zero();
  const int window = std::max(1, cfg.median_window);
  const int n_diffs =
      std::min<int>(window, static_cast<int>(samples.size()) - 1);
  std::vector<Eigen::Vector3d> diffs;
  diffs.reserve(static_cast<size_t>(n_diffs));
  const size_t last = samples.size() - 1;
  for (int k = n_diffs; k >= 1; --k) {
    diffs.push_back((samples[last - k + 1] - samples[last - k]) / dt);
  }
  Eigen::Vector3d v;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> vals;
    vals.reserve(diffs.size());
    for (const auto& d : diffs) vals.push_back(d(c));
    std::sort(vals.begin(), vals.end());
    const size_t k = vals.size();
    v(c) = (k % 2 == 1) ? vals[k / 2] : 0.5 * (vals[k / 2 - 1] + vals[k / 2]);
    if (std::abs(v(c) - prev_accepted(c)) > cfg.outlier_threshold) {
      v(c) = prev_accepted(c);
    }
  }
  prev_accepted = v;
  return v;
}

StateVec StateEstimator::update(const Eigen::Vector3d& p_meas, double phi,
                                double theta) {
  samples_.push_back(p_meas);
  while (samples_.size() > 4) samples_.pop_front();
  const Eigen::Vector3d v = estimate_velocity(samples_, dt_, cfg_, v_accepted_);
  return make_state(p_meas, v, phi, theta);
}

namespace {

StateVec rk4_step(const StateVec& x, const InputVec& u, const ModelParams& prm,
                  double h) {
  const StateVec k1 = continuous_dynamics(x, u, prm);
  const StateVec k2 = continuous_dynamics(x + 0.5 * h * k1, u, prm);
  const StateVec k3 = continuous_dynamics(x + 0.5 * h * k2, u, prm);
  const StateVec k4 = continuous_dynamics(x + h * k3, u, prm);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Piecewise-linear waypoint interpolation; clamped at the ends.
void waypoint_state(const std::vector<ScheduleEntry>& wps, double t,
                    Eigen::Vector3d& p, Eigen::Vector3d& v) {
  if (t <= wps.front().t) {
    p = wps.front().target;
    v.setZero();
    return;
  }
  if (t >= wps.back().t) {
    p = wps.back().target;
    v.setZero();
    return;
  }
  for (size_t k = 1; k < wps.size(); ++k) {
    if (t <= wps[k].t) {
      const double span = wps[k].t - wps[k - 1].t;
      const double s = (t - wps[k - 1].t) / span;
      v = (wps[k].target - wps[k - 1].target) / span;
      p = wps[k - 1].target + s * (wps[k].target - wps[k - 1].target);
      return;
    }
  }
}

}  // namespace

SimWorld::SimWorld(const ScenarioConfig& config) : cfg_(config) {
  validate_scenario(cfg_);
  cfg_.priority.horizon = cfg_.model.horizon;
  rng_.seed(cfg_.seed);

  // Overlap check against the largest obstacle radius in play.
  double max_radius = 0;
  for (const auto& a : cfg_.agents) max_radius = std::max(max_radius, a.radius);
  for (const auto& n : cfg_.non_cooperative) max_radius = std::max(max_radius, n.radius);
  for (size_t i = 0; i < cfg_.agents.size(); ++i) {
    for (size_t k = i + 1; k < cfg_.agents.size(); ++k) {
      if ((cfg_.agents[i].start - cfg_.agents[k].start).norm() < max_radius) {
        throw ScenarioInvalid("agents " + std::to_string(cfg_.agents[i].id) +
                              " and " + std::to_string(cfg_.agents[k].id) +
                              " start closer than the obstacle radius");
      }
    }
  }

  std::uniform_real_distribution<double> jitter(-cfg_.sim.start_jitter,
                                                cfg_.sim.start_jitter);
  ControllerConfig ctrl_cfg;
  ctrl_cfg.model = cfg_.model;
  ctrl_cfg.weights = cfg_.weights;
  ctrl_cfg.solver = cfg_.solver;
  ctrl_cfg.u_min = cfg_.u_min;
  ctrl_cfg.u_max = cfg_.u_max;
  ctrl_cfg.n_obs = cfg_.priority.n_obs;

  agents_.reserve(cfg_.agents.size());
  for (const auto& spec : cfg_.agents) {
    Agent agent{spec.id,
                spec.radius,
                StateVec::Zero(),
                spec.schedule,
                std::make_unique<NmpcController>(ctrl_cfg),
                StateEstimator(cfg_.estimator, cfg_.sim.control_dt),
                hover_input(cfg_.model),
                std::nullopt,
                StateVec::Zero()};
    Eigen::Vector3d start = spec.start;
    for (int c = 0; c < 3; ++c) start(c) += jitter(rng_);
    agent.truth = make_state(start, Eigen::Vector3d::Zero(), 0.0, 0.0);
    agent.estimate = agent.truth;
    agents_.push_back(std::move(agent));
  }
  for (const auto& spec : cfg_.non_cooperative) {
    Intruder intr;
    intr.spec = spec;
    waypoint_state(spec.waypoints, 0.0, intr.p, intr.v);
    intruders_.push_back(std::move(intr));
  }

  log_.scenario_name = cfg_.name;
  log_.control_dt = cfg_.sim.control_dt;
  log_.solve_budget =
      cfg_.solver.time_budget > 0 ? cfg_.solver.time_budget : 0.04;
  record_initial();
}

const StateVec& SimWorld::truth(size_t agent_index) const {
  return agents_.at(agent_index).truth;
}

Eigen::Vector3d SimWorld::target_at(const Agent& agent, double t) const {
  Eigen::Vector3d target = agent.truth.head<3>();
  if (!agent.schedule.empty()) {
    target = agent.schedule.front().target;
    for (const auto& entry : agent.schedule) {
      if (entry.t <= t) target = entry.target;
    }
  }
  return target;
}

void SimWorld::integrate_plant(Agent& agent, const InputVec& u) {
  const int substeps = static_cast<int>(
      std::lround(cfg_.sim.control_dt / cfg_.sim.plant_dt));
  const double h = cfg_.sim.control_dt / substeps;
  for (int s = 0; s < substeps; ++s) {
    agent.truth = cfg_.sim.integrator == SimParams::Integrator::Rk4
                      ? rk4_step(agent.truth, u, cfg_.model, h)
                      : StateVec(agent.truth +
                                 h * continuous_dynamics(agent.truth, u, cfg_.model));
  }
}

void SimWorld::record_initial() {
  TickRecord rec;
  rec.tick = 0;
  rec.time = 0;
  for (const auto& agent : agents_) {
    AgentRecord ar;
    ar.id = agent.id;
    ar.state = agent.truth;
    rec.agents.push_back(std::move(ar));
  }
  for (const auto& intr : intruders_) {
    rec.intruders.push_back({intr.spec.id, intr.p, intr.v});
  }
  log_.ticks.push_back(std::move(rec));
}

void SimWorld::update_intruders(double t) {
  for (auto& intr : intruders_) {
    waypoint_state(intr.spec.waypoints, t, intr.p, intr.v);
  }
}

void SimWorld::tick() {
  const double t_now = tick_ * cfg_.sim.control_dt;
  const int n_horizon = cfg_.model.horizon;
  std::normal_distribution<double> noise(0.0, cfg_.estimator.noise_std);

  // (1) measurement + estimation, deterministic agent order
  for (auto& agent : agents_) {
    Eigen::Vector3d p_meas = agent.truth.head<3>();
    if (cfg_.estimator.noise_std > 0) {
      for (int c = 0; c < 3; ++c) p_meas(c) += noise(rng_);
    }
    agent.estimate =
        agent.estimator.update(p_meas, agent.truth(6), agent.truth(7));
  }
  update_intruders(t_now);

  // (2)-(5): every agent works off the same previous-tick bus snapshot
  TickRecord rec;
  rec.tick = tick_ + 1;
  rec.time = t_now + cfg_.sim.control_dt;
  staging_.clear();

  struct PlannedInput {
    InputVec u;
  };
  std::vector<PlannedInput> applied(agents_.size());

  for (size_t idx = 0; idx < agents_.size(); ++idx) {
    auto& agent = agents_[idx];

    // Candidate obstacle tracks from shared trajectories; constant-velocity
    // fallback when a broadcast is missing or stale.
    std::vector<PredictedTrack> candidates;
    for (const auto& other : agents_) {
      if (other.id == agent.id) continue;
      auto it = bus_.find(other.id);
      if (it != bus_.end()) {
        try {
          candidates.push_back(predict_track(it->second, cfg_.model, tick_));
          continue;
        } catch (const StaleTrajectory&) {
          // fall through to constant velocity
        }
        PredictedTrack track;
        track.agent_id = other.id;
        track.radius = it->second.radius;
        const Eigen::Vector3d p = it->second.measured_state.head<3>();
        const Eigen::Vector3d v = it->second.measured_state.segment<3>(3);
        track.positions = constant_velocity_predict(p, v, n_horizon, cfg_.model.dt);
        track.velocities = v.replicate(1, n_horizon + 1);
        candidates.push_back(std::move(track));
      }
    }
    for (const auto& intr : intruders_) {
      PredictedTrack track;
      track.agent_id = intr.spec.id;
      track.radius = intr.spec.radius;
      track.positions =
          constant_velocity_predict(intr.p, intr.v, n_horizon, cfg_.model.dt);
      track.velocities = intr.v.replicate(1, n_horizon + 1);
      candidates.push_back(std::move(track));
    }

    // Ego track for prioritization: previous plan re-anchored at the
    // current estimate; hover (constant position) before the first solve.
    Eigen::Matrix3Xd ego_positions;
    if (agent.last_solution) {
      ego_positions =
          rollout(agent.estimate, agent.last_solution->u_seq, cfg_.model)
              .topRows<3>();
    } else {
      ego_positions = agent.estimate.head<3>().replicate(1, n_horizon + 1);
    }

    const auto weights = priority_weights(ego_positions, candidates, cfg_.priority);
    const ObstacleSet obstacles = select_obstacles(weights, candidates, cfg_.priority);

    Setpoint sp;
    sp.x_ref = make_state(target_at(agent, t_now), Eigen::Vector3d::Zero(), 0, 0);
    sp.u_ref = hover_input(cfg_.model);

    const NmpcSolution* warm =
        agent.last_solution ? &*agent.last_solution : nullptr;
    NmpcSolution sol =
        agent.controller->solve_step(agent.estimate, agent.u_prev, sp, obstacles, warm);

    AgentRecord ar;
    ar.id = agent.id;
    ar.input = sol.applied();
    ar.solve_time = sol.outcome.solve_time;
    ar.fpr = sol.outcome.fpr_norm;
    ar.infeasibility = sol.outcome.infeasibility;
    ar.y_norm = sol.y_star.size() > 0 ? sol.y_star.norm() : 0.0;
    ar.inner_iters = sol.outcome.inner_iters_total;
    ar.outer_iters = sol.outcome.outer_iters;
    ar.converged = !sol.fallback && sol.outcome.status == SolveStatus::Converged;
    ar.fallback = sol.fallback;
    for (const auto& trk : obstacles.tracks) {
      if (trk.active) ar.selected_obstacles.push_back(trk.source_id);
    }
    rec.agents.push_back(std::move(ar));

    applied[idx].u = sol.applied();
    agent.u_prev = sol.applied();

    SharedTrajectory shared;
    shared.agent_id = agent.id;
    shared.measured_state = agent.estimate;
    shared.input_seq = sol.u_seq;
    shared.radius = agent.radius;
    shared.stamp = tick_;
    staging_[agent.id] = std::move(shared);

    agent.last_solution = std::move(sol);
  }

  // (5) plant integration with the first inputs
  for (size_t idx = 0; idx < agents_.size(); ++idx) {
    integrate_plant(agents_[idx], applied[idx].u);
    rec.agents[idx].state = agents_[idx].truth;
  }

  // (6) publish this tick's broadcasts for the next tick
  bus_ = std::move(staging_);
  staging_.clear();
  update_intruders(t_now + cfg_.sim.control_dt);
  for (const auto& intr : intruders_) {
    rec.intruders.push_back({intr.spec.id, intr.p, intr.v});
  }

  log_.ticks.push_back(std::move(rec));
  ++tick_;
}

void SimWorld::run() {
  const long n_ticks =
      static_cast<long>(std::llround(cfg_.duration / cfg_.sim.control_dt));
  for (long k = 0; k < n_ticks; ++k) tick();
}

RunLog simulate(const ScenarioConfig& config) {
  SimWorld world(config);
  world.run();
  return world.take_log();
}

}  // namespace dnmpc
