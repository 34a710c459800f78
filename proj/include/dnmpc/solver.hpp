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

#ifndef DNMPC_SOLVER_HPP
#define DNMPC_SOLVER_HPP

#include <Eigen/Dense>
#include <chrono>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dnmpc {

struct BoxSet {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

inline Eigen::VectorXd project_box(const Eigen::VectorXd& z, const BoxSet& box) {
  return z.cwiseMax(box.lower).cwiseMin(box.upper);
}

// Inequality-constrained problem min f(u) s.t. F(u) <= 0, u in box.
// Oracles only; the solver never sees the NMPC structure.
struct ParametricProblem {
  int n{0};  // decision dimension
  int m{0};  // constraint dimension
  std::function<double(const Eigen::VectorXd&)> cost;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> cost_grad;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> cmap;
  // (u, w) -> J_F(u)^T w
  std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&,
                     Eigen::VectorXd&)> cmap_jtv;
  BoxSet box;
};

struct AlmSettings {
  double eps{1e-4};         // inner (fixed-point residual) tolerance
  double delta{1e-3};       // infeasibility tolerance
  double rho{1.5};          // penalty update factor
  double c0{1000.0};        // initial penalty
  double theta_sd{0.25};    // sufficient-decrease coefficient on |y+ - y|
  int nu_max{10};           // max outer iterations
  double y_clamp{1e6};      // multiplier clamp M
  double eps_init{1e-3};    // initial inner tolerance, halved each outer iter
  double time_budget{0.04}; // wall-clock cap [s]; <= 0 disables
  // Deterministic budget: total inner iterations across the whole solve.
  // <= 0 disables. Simulations rely on this so runs stay reproducible.
  long max_inner_iters{2000};
  int panoc_memory{10};     // L-BFGS buffer length
};

enum class SolveStatus { Converged, MaxOuterIterations, TimeBudgetExhausted };

struct OuterIterInfo {
  double penalty{0};
  double eps_bar{0};
  double multiplier_step{0};  // z_nu = |y+ - y|_inf
  double infeasibility{0};
  int inner_iters{0};
};

struct SolverOutcome {
  Eigen::VectorXd u_star;
  Eigen::VectorXd y_star;
  SolveStatus status{SolveStatus::MaxOuterIterations};
  double fpr_norm{std::numeric_limits<double>::infinity()};
  double infeasibility{0};
  int outer_iters{0};
  int inner_iters_total{0};
  double solve_time{0};
  double penalty_final{0};
  std::vector<OuterIterInfo> trace;
};

struct NonFiniteOracle : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// psi(u; c, y) = f(u) + (c/2) |[F(u) + y/c]_+|^2
double psi_value(const ParametricProblem& prob, const Eigen::VectorXd& u,
                 double c, const Eigen::VectorXd& y);

// grad psi = grad f + J_F^T [c F(u) + y]_+
void psi_grad(const ParametricProblem& prob, const Eigen::VectorXd& u,
              double c, const Eigen::VectorXd& y, Eigen::VectorXd& grad);

// Box-constrained PANOC: projected-gradient fixed-point iterations with
// L-BFGS acceleration and a forward-backward-envelope line search.
class PanocSolver {
 public:
  using ValueFn = std::function<double(const Eigen::VectorXd&)>;
  using GradFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

  struct Result {
    int iterations{0};
    double fpr_norm{std::numeric_limits<double>::infinity()};
    bool converged{false};
    bool budget_hit{false};
  };

  explicit PanocSolver(int memory = 10) : memory_(memory) {}

  // Minimizes in place; u is projected onto the box first. iter_budget is
  // decremented per iteration and stops the solve when it reaches zero.
  Result minimize(const ValueFn& value, const GradFn& grad, const BoxSet& box,
                  Eigen::VectorXd& u, double tol, long& iter_budget,
                  std::chrono::steady_clock::time_point deadline);

 private:
  int memory_;
  // L-BFGS ring buffer
  Eigen::MatrixXd s_, ybuf_;
  Eigen::VectorXd sy_;
  int pairs_{0}, head_{0};

  void lbfgs_reset() { pairs_ = head_ = 0; }
  void lbfgs_push(const Eigen::VectorXd& s, const Eigen::VectorXd& y);
  void lbfgs_direction(const Eigen::VectorXd& r, Eigen::VectorXd& d) const;
};

// Augmented Lagrangian outer loop around PANOC.
class AlmSolver {
 public:
  explicit AlmSolver(AlmSettings settings = {})
      : settings_(settings), panoc_(settings.panoc_memory) {}

  SolverOutcome solve(const ParametricProblem& prob, Eigen::VectorXd u0,
                      Eigen::VectorXd y0);

  const AlmSettings& settings() const { return settings_; }
  AlmSettings& settings() { return settings_; }

 private:
  AlmSettings settings_;
  PanocSolver panoc_;
};

// Convenience wrapper matching the one-shot use in tests.
SolverOutcome alm_solve(const ParametricProblem& prob,
                        const Eigen::VectorXd& u0, const Eigen::VectorXd& y0,
                        const AlmSettings& settings);

}  // namespace dnmpc

#endif  // DNMPC_SOLVER_HPP
