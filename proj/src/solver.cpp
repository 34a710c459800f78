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

#include <dnmpc/solver.hpp>

#include <algorithm>
#include <cmath>

namespace dnmpc {

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

double pos_part_inf_norm(const Eigen::VectorXd& v) {
  if (v.size() == 0) return 0.0;
  return std::max(0.0, v.maxCoeff());
}

}  // namespace

double psi_value(const ParametricProblem& prob, const Eigen::VectorXd& u,
                 double c, const Eigen::VectorXd& y) {
  double val = prob.cost(u);
  if (prob.m > 0) {
    Eigen::VectorXd f(prob.m);
    prob.cmap(u, f);
    const Eigen::VectorXd q = (f + y / c).cwiseMax(0.0);
    val += 0.5 * c * q.squaredNorm();
  }
  return val;
}

void psi_grad(const ParametricProblem& prob, const Eigen::VectorXd& u,
              double c, const Eigen::VectorXd& y, Eigen::VectorXd& grad) {
  prob.cost_grad(u, grad);
  if (prob.m > 0) {
    Eigen::VectorXd f(prob.m);
    prob.cmap(u, f);
    const Eigen::VectorXd w = (c * f + y).cwiseMax(0.0);
    Eigen::VectorXd jtw(prob.n);
    prob.cmap_jtv(u, w, jtw);
    grad += jtw;
  }
}

void PanocSolver::lbfgs_push(const Eigen::VectorXd& s,
                             const Eigen::VectorXd& y) {
  const double sy = s.dot(y);
  if (!(sy > 1e-12 * s.norm() * y.norm())) return;  // skip non-curvature pairs
  if (s_.cols() != memory_ || s_.rows() != s.size()) {
    s_.resize(s.size(), memory_);
    ybuf_.resize(s.size(), memory_);
    sy_.resize(memory_);
    pairs_ = head_ = 0;
  }
  s_.col(head_) = s;
  ybuf_.col(head_) = y;
  sy_(head_) = sy;
  head_ = (head_ + 1) % memory_;
  pairs_ = std::min(pairs_ + 1, memory_);
}

void PanocSolver::lbfgs_direction(const Eigen::VectorXd& r,
                                  Eigen::VectorXd& d) const {
  d = -r;
  if (pairs_ == 0) return;
  Eigen::VectorXd alpha(pairs_);
  // newest pair has index pairs_-1
  auto idx = [&](int k) { return (head_ - 1 - k + 2 * memory_) % memory_; };
  for (int k = 0; k < pairs_; ++k) {
    const int i = idx(k);
    alpha(k) = s_.col(i).dot(d) / sy_(i);
    d -= alpha(k) * ybuf_.col(i);
  }
  const int newest = idx(0);
  d *= sy_(newest) / ybuf_.col(newest).squaredNorm();
  for (int k = pairs_ - 1; k >= 0; --k) {
    const int i = idx(k);
    const double beta = ybuf_.col(i).dot(d) / sy_(i);
    d += (alpha(k) - beta) * s_.col(i);
  }
}

PanocSolver::Result PanocSolver::minimize(
    const ValueFn& value, const GradFn& grad, const BoxSet& box,
    Eigen::VectorXd& u, double tol, long& iter_budget,
    std::chrono::steady_clock::time_point deadline) {
  const Eigen::Index n = u.size();
  Result res;
  lbfgs_reset();

  u = project_box(u, box);
  Eigen::VectorXd g(n), g2(n);
  double fu = value(u);
  grad(u, g);
  if (!std::isfinite(fu) || !all_finite(g)) {
    throw NonFiniteOracle("non-finite cost or gradient at the initial point");
  }

  // Local Lipschitz estimate for the initial step size.
  Eigen::VectorXd du = (1e-6 * u.cwiseAbs()).cwiseMax(1e-6);
  grad(u + du, g2);
  double lip = (g2 - g).norm() / du.norm();
  if (!std::isfinite(lip) || lip < 1e-9) lip = 1e-9;
  double gamma = 0.95 / lip;

  const double f_scale = 1.0 + std::abs(fu);
  Eigen::VectorXd v = project_box(u - gamma * g, box);
  Eigen::VectorXd r = (u - v) / gamma;
  double fv = value(v);

  Eigen::VectorXd d(n), u_new(n), g_new(n), v_new(n), r_new(n);

  auto within_budget = [&]() {
    if (iter_budget <= 0) return false;
    if ((res.iterations & 0xf) == 0 &&
        std::chrono::steady_clock::now() >= deadline) {
      return false;
    }
    return true;
  };

  constexpr int kMaxLineSearch = 10;
  constexpr double kGammaMin = 1e-12;

  while (true) {
    // Step-size adaptation: enforce the quadratic upper bound at gamma.
    while (fv > fu + g.dot(v - u) + (0.5 / gamma) * (v - u).squaredNorm() +
                     1e-12 * f_scale &&
           gamma > kGammaMin) {
      lip *= 2.0;
      gamma *= 0.5;
      lbfgs_reset();
      v = project_box(u - gamma * g, box);
      r = (u - v) / gamma;
      fv = value(v);
    }

    res.fpr_norm = r.lpNorm<Eigen::Infinity>();
    if (res.fpr_norm <= tol) {
      res.converged = true;
      u = v;
      break;
    }
    if (!within_budget()) {
      res.budget_hit = true;
      u = v;
      break;
    }

    const double fbe = fu + g.dot(v - u) + (0.5 / gamma) * (v - u).squaredNorm();
    const double sigma = 0.5 * gamma * 0.05;  // (gamma/2)(1 - gamma L), gamma L = 0.95
    const double decrease = sigma * r.squaredNorm();

    lbfgs_direction(r, d);
    if (!all_finite(d)) {
      lbfgs_reset();
      d = v - u;
    }

    bool accepted = false;
    double tau = 1.0;
    for (int ls = 0; ls < kMaxLineSearch && !accepted; ++ls) {
      u_new = u + (1.0 - tau) * (v - u) + tau * d;
      const double f_new = value(u_new);
      if (std::isfinite(f_new)) {
        grad(u_new, g_new);
        if (all_finite(g_new)) {
          v_new = project_box(u_new - gamma * g_new, box);
          r_new = (u_new - v_new) / gamma;
          const double fbe_new = f_new + g_new.dot(v_new - u_new) +
                                 (0.5 / gamma) * (v_new - u_new).squaredNorm();
          if (fbe_new <= fbe - decrease) {
            accepted = true;
            fu = f_new;
            break;
          }
        }
      }
      tau *= 0.5;
    }
    if (!accepted) {
      // Safe fallback: plain projected-gradient step.
      u_new = v;
      fu = fv;
      grad(u_new, g_new);
      if (!std::isfinite(fu) || !all_finite(g_new)) {
        throw NonFiniteOracle("non-finite oracle at projected-gradient point");
      }
      v_new = project_box(u_new - gamma * g_new, box);
      r_new = (u_new - v_new) / gamma;
    }

    lbfgs_push(u_new - u, r_new - r);
    u.swap(u_new);
    g.swap(g_new);
    v.swap(v_new);
    r.swap(r_new);
    fv = value(v);
    ++res.iterations;
    --iter_budget;
  }
  return res;
}

SolverOutcome AlmSolver::solve(const ParametricProblem& prob,
                               Eigen::VectorXd u0, Eigen::VectorXd y0) {
  const auto t_start = std::chrono::steady_clock::now();
  auto deadline = std::chrono::steady_clock::time_point::max();
  if (settings_.time_budget > 0) {
    deadline = t_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                             std::chrono::duration<double>(settings_.time_budget));
  }
  long iter_budget = settings_.max_inner_iters > 0
                         ? settings_.max_inner_iters
                         : std::numeric_limits<long>::max();

  SolverOutcome out;
  Eigen::VectorXd u = project_box(u0, prob.box);
  Eigen::VectorXd y = y0;
  Eigen::VectorXd y_bar(prob.m), y_next(prob.m), f_u(prob.m);
  double c = settings_.c0;
  double eps_bar = std::max(settings_.eps, settings_.eps_init);
  double z_prev = 0;

  auto value = [&](const Eigen::VectorXd& uu) {
    return psi_value(prob, uu, c, y_bar);
  };
  auto grad = [&](const Eigen::VectorXd& uu, Eigen::VectorXd& gg) {
    psi_grad(prob, uu, c, y_bar, gg);
  };

  bool budget_hit = false;
  for (int nu = 0; nu <= settings_.nu_max; ++nu) {
    y_bar = y.cwiseMax(0.0).cwiseMin(settings_.y_clamp);

    auto inner = panoc_.minimize(value, grad, prob.box, u, eps_bar,
                                 iter_budget, deadline);
    out.inner_iters_total += inner.iterations;
    out.fpr_norm = inner.fpr_norm;
    ++out.outer_iters;

    double z = 0;
    double infeas = 0;
    if (prob.m > 0) {
      prob.cmap(u, f_u);
      y_next = (y_bar + c * f_u).cwiseMax(0.0);
      z = (y_next - y).lpNorm<Eigen::Infinity>();
      infeas = pos_part_inf_norm(f_u);
      y = y_next;
    }
    out.trace.push_back({c, eps_bar, z, infeas, inner.iterations});
    out.infeasibility = infeas;

    if (inner.budget_hit) {
      budget_hit = true;
      break;
    }
    if (z <= c * settings_.delta && eps_bar <= settings_.eps &&
        infeas <= settings_.delta) {
      out.status = SolveStatus::Converged;
      break;
    }
    if (z <= c * settings_.delta && infeas <= settings_.delta) {
      // Multipliers have settled; only the inner tolerance is outstanding,
      // so drop straight to the target instead of halving down to it.
      eps_bar = settings_.eps;
    } else {
      if (nu > 0 && z > settings_.theta_sd * z_prev) c *= settings_.rho;
      eps_bar = std::max(settings_.eps, 0.5 * eps_bar);
    }
    z_prev = z;
  }
  if (budget_hit) out.status = SolveStatus::TimeBudgetExhausted;

  out.u_star = std::move(u);
  out.y_star = std::move(y);
  out.penalty_final = c;
  out.solve_time = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t_start)
                       .count();
  return out;
}

SolverOutcome alm_solve(const ParametricProblem& prob,
                        const Eigen::VectorXd& u0, const Eigen::VectorXd& y0,
                        const AlmSettings& settings) {
  AlmSolver solver(settings);
  return solver.solve(prob, u0, y0);
}

}  // namespace dnmpc
