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

#include <dnmpc/metrics.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace dnmpc {

using nlohmann::json;

namespace {

constexpr int kHistogramBins = 40;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

Metrics metrics_report(const RunLog& log) {
  Metrics m;
  const double budget = log.solve_budget > 0 ? log.solve_budget : 0.04;
  m.histogram_bin_width = budget / kHistogramBins;
  m.solve_time_histogram.assign(kHistogramBins + 1, 0);

  double time_sum = 0;
  for (const auto& rec : log.ticks) {
    double min_aa = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < rec.agents.size(); ++i) {
      for (size_t k = i + 1; k < rec.agents.size(); ++k) {
        min_aa = std::min(min_aa, (rec.agents[i].state.head<3>() -
                                   rec.agents[k].state.head<3>())
                                      .norm());
      }
    }
    m.min_pairwise_distance.push_back(min_aa);
    m.global_min_distance = std::min(m.global_min_distance, min_aa);

    if (!rec.intruders.empty()) {
      double min_ai = std::numeric_limits<double>::infinity();
      for (const auto& agent : rec.agents) {
        for (const auto& intr : rec.intruders) {
          min_ai = std::min(min_ai, (agent.state.head<3>() - intr.p).norm());
        }
      }
      m.min_intruder_distance.push_back(min_ai);
      m.global_min_intruder_distance =
          std::min(m.global_min_intruder_distance, min_ai);
    }

    double fpr = 0, y_norm = 0, infeas = 0;
    int inner = 0;
    for (const auto& agent : rec.agents) {
      if (rec.tick == 0) continue;  // initial snapshot carries no solve
      ++m.total_solves;
      time_sum += agent.solve_time;
      m.solve_time_max = std::max(m.solve_time_max, agent.solve_time);
      int bin = static_cast<int>(agent.solve_time / m.histogram_bin_width);
      bin = std::clamp(bin, 0, kHistogramBins);
      ++m.solve_time_histogram[static_cast<size_t>(bin)];
      if (!agent.converged) ++m.nonconverged_solves;
      fpr = std::max(fpr, agent.fpr);
      y_norm = std::max(y_norm, agent.y_norm);
      infeas = std::max(infeas, agent.infeasibility);
      inner += agent.inner_iters;
    }
    if (rec.tick > 0) {
      m.max_fpr.push_back(fpr);
      m.max_y_norm.push_back(y_norm);
      m.max_infeasibility.push_back(infeas);
      m.total_inner_iters.push_back(inner);
    }
  }
  if (m.total_solves > 0) {
    m.solve_time_mean = time_sum / static_cast<double>(m.total_solves);
    m.nonconvergence_rate =
        static_cast<double>(m.nonconverged_solves) /
        static_cast<double>(m.total_solves);
  }
  return m;
}

void write_run_outputs(const RunLog& log, const ScenarioConfig& config,
                       const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  // trajectory.csv holds only seed-deterministic quantities; wall-clock
  // solve times go to timing.csv so identical seeds give identical bytes.
  {
    std::ofstream out(fs::path(out_dir) / "trajectory.csv");
    out << "tick,id,px,py,pz,vx,vy,vz,phi,theta,thrust,phi_ref,theta_ref,"
           "fpr,infeasibility,y_norm,inner_iters,outer_iters,converged,fallback\n";
    for (const auto& rec : log.ticks) {
      for (const auto& a : rec.agents) {
        out << rec.tick << ',' << a.id;
        for (int i = 0; i < kStateDim; ++i) out << ',' << fmt(a.state(i));
        for (int i = 0; i < kInputDim; ++i) out << ',' << fmt(a.input(i));
        out << ',' << fmt(a.fpr) << ',' << fmt(a.infeasibility) << ','
            << fmt(a.y_norm) << ',' << a.inner_iters << ',' << a.outer_iters
            << ',' << (a.converged ? 1 : 0) << ',' << (a.fallback ? 1 : 0)
            << '\n';
      }
    }
  }
  {
    std::ofstream out(fs::path(out_dir) / "timing.csv");
    out << "tick,id,solve_time\n";
    for (const auto& rec : log.ticks) {
      if (rec.tick == 0) continue;
      for (const auto& a : rec.agents) {
        out << rec.tick << ',' << a.id << ',' << fmt(a.solve_time) << '\n';
      }
    }
  }
  {
    std::ofstream out(fs::path(out_dir) / "intruders.csv");
    out << "tick,id,px,py,pz,vx,vy,vz\n";
    for (const auto& rec : log.ticks) {
      for (const auto& intr : rec.intruders) {
        out << rec.tick << ',' << intr.id;
        for (int i = 0; i < 3; ++i) out << ',' << fmt(intr.p(i));
        for (int i = 0; i < 3; ++i) out << ',' << fmt(intr.v(i));
        out << '\n';
      }
    }
  }

  const Metrics m = metrics_report(log);
  {
    std::ofstream out(fs::path(out_dir) / "min_distance.csv");
    out << "tick,min_agent_distance,min_intruder_distance\n";
    for (size_t k = 0; k < m.min_pairwise_distance.size(); ++k) {
      out << k << ',' << fmt(m.min_pairwise_distance[k]) << ',';
      if (k < m.min_intruder_distance.size()) {
        out << fmt(m.min_intruder_distance[k]);
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(fs::path(out_dir) / "config_echo.json");
    out << scenario_to_json_string(config) << '\n';
  }
  {
    std::ofstream out(fs::path(out_dir) / "summary.json");
    out << metrics_summary_json(m, log) << '\n';
  }
}

std::string metrics_summary_json(const Metrics& m, const RunLog& log) {
  json j;
  j["scenario"] = log.scenario_name;
  j["ticks"] = log.ticks.empty() ? 0 : log.ticks.back().tick;
  j["total_solves"] = m.total_solves;
  j["global_min_distance"] = m.global_min_distance;
  if (!m.min_intruder_distance.empty()) {
    j["global_min_intruder_distance"] = m.global_min_intruder_distance;
  }
  j["solve_time_mean"] = m.solve_time_mean;
  j["solve_time_max"] = m.solve_time_max;
  j["nonconvergence_rate"] = m.nonconvergence_rate;
  j["solve_time_histogram"] = m.solve_time_histogram;
  j["histogram_bin_width"] = m.histogram_bin_width;
  return j.dump(2);
}

RunLog read_run_outputs(const std::string& out_dir) {
  namespace fs = std::filesystem;
  RunLog log;

  {
    std::ifstream in(fs::path(out_dir) / "config_echo.json");
    if (in) {
      std::stringstream buf;
      buf << in.rdbuf();
      const ScenarioConfig cfg = scenario_from_json_string(buf.str());
      log.scenario_name = cfg.name;
      log.control_dt = cfg.sim.control_dt;
      log.solve_budget = cfg.solver.time_budget;
    }
  }

  std::ifstream in(fs::path(out_dir) / "trajectory.csv");
  if (!in) throw ParseError("cannot open " + out_dir + "/trajectory.csv");
  std::string line;
  std::getline(in, line);  // header
  std::map<long, TickRecord> ticks;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < 20) throw ParseError("malformed trajectory.csv row");
    AgentRecord a;
    const long tick = std::stol(f[0]);
    a.id = std::stoi(f[1]);
    for (int i = 0; i < kStateDim; ++i) a.state(i) = std::stod(f[2 + static_cast<size_t>(i)]);
    for (int i = 0; i < kInputDim; ++i) a.input(i) = std::stod(f[10 + static_cast<size_t>(i)]);
    a.fpr = std::stod(f[13]);
    a.infeasibility = std::stod(f[14]);
    a.y_norm = std::stod(f[15]);
    a.inner_iters = std::stoi(f[16]);
    a.outer_iters = std::stoi(f[17]);
    a.converged = f[18] == "1";
    a.fallback = f[19] == "1";
    auto& rec = ticks[tick];
    rec.tick = tick;
    rec.time = static_cast<double>(tick) * log.control_dt;
    rec.agents.push_back(std::move(a));
  }

  std::ifstream timing(fs::path(out_dir) / "timing.csv");
  if (timing) {
    std::getline(timing, line);
    while (std::getline(timing, line)) {
      if (line.empty()) continue;
      const auto f = split_csv(line);
      if (f.size() < 3) continue;
      const long tick = std::stol(f[0]);
      const int id = std::stoi(f[1]);
      auto it = ticks.find(tick);
      if (it == ticks.end()) continue;
      for (auto& a : it->second.agents) {
        if (a.id == id) a.solve_time = std::stod(f[2]);
      }
    }
  }

  std::ifstream intr(fs::path(out_dir) / "intruders.csv");
  if (intr) {
    std::getline(intr, line);
    while (std::getline(intr, line)) {
      if (line.empty()) continue;
      const auto f = split_csv(line);
      if (f.size() < 8) continue;
      IntruderRecord r;
      const long tick = std::stol(f[0]);
      r.id = std::stoi(f[1]);
      for (int i = 0; i < 3; ++i) r.p(i) = std::stod(f[2 + static_cast<size_t>(i)]);
      for (int i = 0; i < 3; ++i) r.v(i) = std::stod(f[5 + static_cast<size_t>(i)]);
      auto it = ticks.find(tick);
      if (it != ticks.end()) it->second.intruders.push_back(r);
    }
  }

  for (auto& [tick, rec] : ticks) log.ticks.push_back(std::move(rec));
  return log;
}

}  // namespace dnmpc
