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

#include <dnmpc/scenario.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dnmpc {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::Vector3d& v) { return json::array({v(0), v(1), v(2)}); }

Eigen::Vector3d vec3_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) {
    throw ParseError("field '" + field + "' must be an array of 3 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <int N>
Eigen::Matrix<double, N, 1> vecn_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != N) {
    throw ParseError("field '" + field + "' must be an array of " +
                     std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = j[static_cast<size_t>(i)].get<double>();
  return v;
}

template <int N>
json vecn_to_json(const Eigen::Matrix<double, N, 1>& v) {
  json out = json::array();
  for (int i = 0; i < N; ++i) out.push_back(v(i));
  return out;
}

std::vector<ScheduleEntry> schedule_from_json(const json& j, const std::string& field) {
  std::vector<ScheduleEntry> out;
  for (const auto& e : j) {
    ScheduleEntry entry;
    entry.t = e.at("t").get<double>();
    entry.target = vec3_from_json(e.at("target"), field + ".target");
    out.push_back(entry);
  }
  return out;
}

json schedule_to_json(const std::vector<ScheduleEntry>& schedule) {
  json out = json::array();
  for (const auto& e : schedule) {
    out.push_back({{"t", e.t}, {"target", vec_to_json(e.target)}});
  }
  return out;
}

template <typename T>
void maybe(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).template get<T>();
}

void parse_overrides(const json& j, ScenarioConfig& cfg) {
  if (j.contains("model")) {
    const auto& m = j.at("model");
    if (m.contains("drag")) cfg.model.drag = vec3_from_json(m.at("drag"), "model.drag");
    if (m.contains("attitude_gain"))
      cfg.model.attitude_gain = vecn_from_json<2>(m.at("attitude_gain"), "model.attitude_gain");
    if (m.contains("attitude_tau"))
      cfg.model.attitude_tau = vecn_from_json<2>(m.at("attitude_tau"), "model.attitude_tau");
    maybe(m, "gravity", cfg.model.gravity);
    maybe(m, "dt", cfg.model.dt);
    maybe(m, "horizon", cfg.model.horizon);
  }
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    if (w.contains("q_x")) cfg.weights.q_x = vecn_from_json<8>(w.at("q_x"), "weights.q_x");
    if (w.contains("q_u")) cfg.weights.q_u = vec3_from_json(w.at("q_u"), "weights.q_u");
    if (w.contains("q_du")) cfg.weights.q_du = vec3_from_json(w.at("q_du"), "weights.q_du");
    if (w.contains("q_t")) cfg.weights.q_t = vecn_from_json<8>(w.at("q_t"), "weights.q_t");
    if (w.contains("q_p_min")) cfg.weights.q_p_min = vec3_from_json(w.at("q_p_min"), "weights.q_p_min");
    if (w.contains("q_p_max")) cfg.weights.q_p_max = vec3_from_json(w.at("q_p_max"), "weights.q_p_max");
    maybe(w, "b", cfg.weights.b);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    maybe(s, "eps", cfg.solver.eps);
    maybe(s, "delta", cfg.solver.delta);
    maybe(s, "rho", cfg.solver.rho);
    maybe(s, "c0", cfg.solver.c0);
    maybe(s, "theta_sd", cfg.solver.theta_sd);
    maybe(s, "nu_max", cfg.solver.nu_max);
    maybe(s, "y_clamp", cfg.solver.y_clamp);
    maybe(s, "eps_init", cfg.solver.eps_init);
    maybe(s, "time_budget", cfg.solver.time_budget);
    maybe(s, "max_inner_iters", cfg.solver.max_inner_iters);
    maybe(s, "panoc_memory", cfg.solver.panoc_memory);
  }
  if (j.contains("priority")) {
    const auto& p = j.at("priority");
    maybe(p, "d_s", cfg.priority.d_s);
    maybe(p, "a", cfg.priority.a);
    maybe(p, "big_m", cfg.priority.big_m);
    maybe(p, "n_obs", cfg.priority.n_obs);
  }
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    if (b.contains("u_min")) cfg.u_min = vec3_from_json(b.at("u_min"), "bounds.u_min");
    if (b.contains("u_max")) cfg.u_max = vec3_from_json(b.at("u_max"), "bounds.u_max");
  }
  if (j.contains("estimator")) {
    const auto& e = j.at("estimator");
    maybe(e, "noise_std", cfg.estimator.noise_std);
    maybe(e, "median_window", cfg.estimator.median_window);
    maybe(e, "outlier_threshold", cfg.estimator.outlier_threshold);
  }
  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    maybe(s, "plant_dt", cfg.sim.plant_dt);
    maybe(s, "control_dt", cfg.sim.control_dt);
    maybe(s, "start_jitter", cfg.sim.start_jitter);
    if (s.contains("integrator")) {
      const std::string name = s.at("integrator").get<std::string>();
      if (name == "rk4") {
        cfg.sim.integrator = SimParams::Integrator::Rk4;
      } else if (name == "euler") {
        cfg.sim.integrator = SimParams::Integrator::Euler;
      } else {
        throw ParseError("sim.integrator must be 'rk4' or 'euler'");
      }
    }
  }
}

json overrides_to_json(const ScenarioConfig& cfg) {
  json j;
  j["model"] = {{"drag", vec_to_json(cfg.model.drag)},
                {"attitude_gain", vecn_to_json<2>(cfg.model.attitude_gain)},
                {"attitude_tau", vecn_to_json<2>(cfg.model.attitude_tau)},
                {"gravity", cfg.model.gravity},
                {"dt", cfg.model.dt},
                {"horizon", cfg.model.horizon}};
  j["weights"] = {{"q_x", vecn_to_json<8>(cfg.weights.q_x)},
                  {"q_u", vec_to_json(cfg.weights.q_u)},
                  {"q_du", vec_to_json(cfg.weights.q_du)},
                  {"q_t", vecn_to_json<8>(cfg.weights.q_t)},
                  {"q_p_min", vec_to_json(cfg.weights.q_p_min)},
                  {"q_p_max", vec_to_json(cfg.weights.q_p_max)},
                  {"b", cfg.weights.b}};
  j["solver"] = {{"eps", cfg.solver.eps},
                 {"delta", cfg.solver.delta},
                 {"rho", cfg.solver.rho},
                 {"c0", cfg.solver.c0},
                 {"theta_sd", cfg.solver.theta_sd},
                 {"nu_max", cfg.solver.nu_max},
                 {"y_clamp", cfg.solver.y_clamp},
                 {"eps_init", cfg.solver.eps_init},
                 {"time_budget", cfg.solver.time_budget},
                 {"max_inner_iters", cfg.solver.max_inner_iters},
                 {"panoc_memory", cfg.solver.panoc_memory}};
  j["priority"] = {{"d_s", cfg.priority.d_s},
                   {"a", cfg.priority.a},
                   {"big_m", cfg.priority.big_m},
                   {"n_obs", cfg.priority.n_obs}};
  j["bounds"] = {{"u_min", vec_to_json(cfg.u_min)}, {"u_max", vec_to_json(cfg.u_max)}};
  j["estimator"] = {{"noise_std", cfg.estimator.noise_std},
                    {"median_window", cfg.estimator.median_window},
                    {"outlier_threshold", cfg.estimator.outlier_threshold}};
  j["sim"] = {{"plant_dt", cfg.sim.plant_dt},
              {"control_dt", cfg.sim.control_dt},
              {"start_jitter", cfg.sim.start_jitter},
              {"integrator",
               cfg.sim.integrator == SimParams::Integrator::Rk4 ? "rk4" : "euler"}};
  return j;
}

}  // namespace

void validate_scenario(const ScenarioConfig& cfg) {
  if (cfg.agents.empty()) throw ValidationError("agents: at least one agent required");
  if (cfg.duration < 0) throw ValidationError("duration: must be >= 0");
  if (cfg.model.dt <= 0 || cfg.model.horizon < 1) {
    throw ValidationError("model: dt must be > 0 and horizon >= 1");
  }
  if (cfg.sim.plant_dt <= 0 ||
      std::abs(std::remainder(cfg.sim.control_dt, cfg.sim.plant_dt)) > 1e-9) {
    throw ValidationError("sim.plant_dt: control_dt must be an integer multiple of plant_dt");
  }
  if ((cfg.u_min.array() > cfg.u_max.array()).any()) {
    throw ValidationError("bounds: u_min must be <= u_max");
  }
  std::set<int> ids;
  for (const auto& agent : cfg.agents) {
    if (!ids.insert(agent.id).second) {
      throw ValidationError("agents.id: duplicate agent id " + std::to_string(agent.id));
    }
    if (agent.radius <= 0) {
      throw ValidationError("agents.radius: must be > 0 (agent " + std::to_string(agent.id) + ")");
    }
    for (size_t k = 1; k < agent.schedule.size(); ++k) {
      if (agent.schedule[k].t < agent.schedule[k - 1].t) {
        throw ValidationError("agents.schedule: times must be non-decreasing (agent " +
                              std::to_string(agent.id) + ")");
      }
    }
  }
  for (const auto& nc : cfg.non_cooperative) {
    if (!ids.insert(nc.id).second) {
      throw ValidationError("non_cooperative.id: duplicate id " + std::to_string(nc.id));
    }
    if (nc.waypoints.empty()) {
      throw ValidationError("non_cooperative.waypoints: must not be empty (id " +
                            std::to_string(nc.id) + ")");
    }
    for (size_t k = 1; k < nc.waypoints.size(); ++k) {
      if (nc.waypoints[k].t <= nc.waypoints[k - 1].t) {
        throw ValidationError("non_cooperative.waypoints: times must be strictly increasing (id " +
                              std::to_string(nc.id) + ")");
      }
    }
  }
}

ScenarioConfig scenario_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed scenario JSON: ") + e.what());
  }
  ScenarioConfig cfg;
  try {
    maybe(j, "name", cfg.name);
    maybe(j, "duration", cfg.duration);
    maybe(j, "seed", cfg.seed);
    if (!j.contains("agents")) throw ParseError("field 'agents' is required");
    for (const auto& a : j.at("agents")) {
      AgentSpec spec;
      spec.id = a.at("id").get<int>();
      spec.start = vec3_from_json(a.at("start"), "agents.start");
      if (a.contains("schedule")) spec.schedule = schedule_from_json(a.at("schedule"), "agents.schedule");
      maybe(a, "radius", spec.radius);
      cfg.agents.push_back(std::move(spec));
    }
    if (j.contains("non_cooperative")) {
      for (const auto& n : j.at("non_cooperative")) {
        NonCooperativeSpec spec;
        spec.id = n.at("id").get<int>();
        maybe(n, "radius", spec.radius);
        spec.waypoints = schedule_from_json(n.at("waypoints"), "non_cooperative.waypoints");
        cfg.non_cooperative.push_back(std::move(spec));
      }
    }
    if (j.contains("overrides")) parse_overrides(j.at("overrides"), cfg);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario field error: ") + e.what());
  }
  cfg.priority.horizon = cfg.model.horizon;
  validate_scenario(cfg);
  return cfg;
}

std::string scenario_to_json_string(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["duration"] = cfg.duration;
  j["seed"] = cfg.seed;
  j["agents"] = json::array();
  for (const auto& a : cfg.agents) {
    j["agents"].push_back({{"id", a.id},
                           {"start", vec_to_json(a.start)},
                           {"schedule", schedule_to_json(a.schedule)},
                           {"radius", a.radius}});
  }
  j["non_cooperative"] = json::array();
  for (const auto& n : cfg.non_cooperative) {
    j["non_cooperative"].push_back({{"id", n.id},
                                    {"radius", n.radius},
                                    {"waypoints", schedule_to_json(n.waypoints)}});
  }
  j["overrides"] = overrides_to_json(cfg);
  return j.dump(2);
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_from_json_string(buf.str());
}

void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write scenario file: " + path);
  out << scenario_to_json_string(cfg) << "\n";
}

namespace {

std::vector<ScheduleEntry> hold(const Eigen::Vector3d& p) { return {{0.0, p}}; }

// Nine agents on a 2x5 grid with one vacant slot; every five seconds one
// agent relocates to the vacant slot, cycling through the formation.
ScenarioConfig make_formation_swap() {
  ScenarioConfig cfg;
  cfg.name = "formation-swap";
  cfg.duration = 70.0;
  std::vector<Eigen::Vector3d> slots;
  for (int row = 0; row < 2; ++row) {
    for (int col = 0; col < 5; ++col) {
      slots.emplace_back(col * 1.0, row * 1.0, 1.0);
    }
  }
  const int n_agents = 9;
  int vacant = 9;
  std::vector<int> slot_of(n_agents);
  for (int i = 0; i < n_agents; ++i) slot_of[i] = i;
  for (int i = 0; i < n_agents; ++i) {
    AgentSpec spec;
    spec.id = i;
    spec.start = slots[static_cast<size_t>(slot_of[i])];
    spec.schedule = hold(spec.start);
    cfg.agents.push_back(spec);
  }
  for (int move = 0; move < 12; ++move) {
    const double t = 5.0 * (move + 1);
    const int mover = move % n_agents;
    const int from = slot_of[mover];
    cfg.agents[static_cast<size_t>(mover)].schedule.push_back(
        {t, slots[static_cast<size_t>(vacant)]});
    slot_of[mover] = vacant;
    vacant = from;
  }
  return cfg;
}

// Two teams of five facing each other 5 m apart; everyone swaps to the
// opposite line at once, then swaps back.
ScenarioConfig make_team_swap() {
  ScenarioConfig cfg;
  cfg.name = "team-swap";
  cfg.duration = 30.0;
  for (int i = 0; i < 5; ++i) {
    const Eigen::Vector3d a(0.0, i * 1.0, 1.0);
    const Eigen::Vector3d b(5.0, i * 1.0, 1.0);
    AgentSpec sa;
    sa.id = i;
    sa.start = a;
    sa.schedule = {{0.0, a}, {1.0, b}, {15.0, a}};
    cfg.agents.push_back(sa);
    AgentSpec sb;
    sb.id = 5 + i;
    sb.start = b;
    sb.schedule = {{0.0, b}, {1.0, a}, {15.0, b}};
    cfg.agents.push_back(sb);
  }
  return cfg;
}

// Tight 8-agent formation holding position while a scripted intruder flies
// through it twice at about 1 m/s.
ScenarioConfig make_intruder() {
  ScenarioConfig cfg;
  cfg.name = "intruder";
  cfg.duration = 30.0;
  int id = 0;
  for (int row = 0; row < 2; ++row) {
    for (int col = 0; col < 4; ++col) {
      AgentSpec spec;
      spec.id = id++;
      spec.start = Eigen::Vector3d(col * 1.0, row * 1.0, 1.0);
      spec.schedule = hold(spec.start);
      cfg.agents.push_back(spec);
    }
  }
  NonCooperativeSpec nc;
  nc.id = 100;
  nc.radius = 0.4;
  nc.waypoints = {{0.0, {1.5, -4.0, 1.0}},
                  {9.0, {1.5, 5.0, 1.0}},
                  {12.0, {1.5, 5.0, 1.0}},
                  {21.0, {1.5, -4.0, 1.0}},
                  {30.0, {1.5, -4.0, 1.0}}};
  cfg.non_cooperative.push_back(nc);
  return cfg;
}

// Two agents 3 m apart swapping positions head-on.
ScenarioConfig make_head_on() {
  ScenarioConfig cfg;
  cfg.name = "head-on";
  cfg.duration = 15.0;
  const Eigen::Vector3d a(0.0, 0.0, 1.0);
  const Eigen::Vector3d b(3.0, 0.0, 1.0);
  AgentSpec sa;
  sa.id = 0;
  sa.start = a;
  sa.schedule = {{0.0, a}, {1.0, b}};
  cfg.agents.push_back(sa);
  AgentSpec sb;
  sb.id = 1;
  sb.start = b;
  sb.schedule = {{0.0, b}, {1.0, a}};
  cfg.agents.push_back(sb);
  return cfg;
}

// Single agent stepping 2 m in x after one second.
ScenarioConfig make_hover_step() {
  ScenarioConfig cfg;
  cfg.name = "hover-step";
  cfg.duration = 12.0;
  AgentSpec spec;
  spec.id = 0;
  spec.start = Eigen::Vector3d(0, 0, 1);
  spec.schedule = {{0.0, {0, 0, 1}}, {1.0, {2, 0, 1}}};
  cfg.agents.push_back(spec);
  return cfg;
}

}  // namespace

std::vector<std::string> builtin_scenario_names() {
  return {"hover-step", "head-on", "formation-swap", "team-swap", "intruder"};
}

bool is_builtin_scenario(const std::string& name) {
  const auto names = builtin_scenario_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

ScenarioConfig builtin_scenario(const std::string& name) {
  ScenarioConfig cfg;
  if (name == "formation-swap") {
    cfg = make_formation_swap();
  } else if (name == "team-swap") {
    cfg = make_team_swap();
  } else if (name == "intruder") {
    cfg = make_intruder();
  } else if (name == "head-on") {
    cfg = make_head_on();
  } else if (name == "hover-step") {
    cfg = make_hover_step();
  } else {
    throw ValidationError("unknown builtin scenario: " + name);
  }
  // Builtins rely on the deterministic iteration budget alone: a wall-clock
  // deadline would make the logged trajectories machine-load dependent.
  cfg.solver.time_budget = 0;
  cfg.priority.horizon = cfg.model.horizon;
  validate_scenario(cfg);
  return cfg;
}

}  // namespace dnmpc
