#pragma once

#include <cassert>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "holm/core.hpp"

namespace holm {

// Convex-combination update of the nonmonotone reference value:
//   D_{k+1} = (1 - theta_k) psi(x_{k+1}) + theta_k D_k.
// The result lies in [psi_new, D_prev]; the clamp enforces that exactly
// against floating-point wobble so trace invariants hold bit-for-bit.
inline double nonmonotone_update(double D_prev, double theta, double psi_new) {
  assert(psi_new <= D_prev && "nonmonotone_update: psi_new must not exceed D_prev");
  const double D = (1.0 - theta) * psi_new + theta * D_prev;
  return std::min(std::max(D, psi_new), D_prev);
}

struct ArmijoResult {
  bool accepted = false;
  double alpha = 0;
  int backtracks = 0;                // trials rejected before acceptance
  std::vector<MeritEval> trials;     // every trial, last one is the accepted step
};

// Backtracking line search against the nonmonotone reference D:
// find the largest alpha = rho^l * alpha_bar with
//   psi(x + alpha d) <= D + sigma * alpha * grad_dot_d.
// Requires a descent direction (grad_dot_d < 0) and D >= psi(x).
inline ArmijoResult armijo_search(const NlsProblem& p, const Vector& x,
                                  const Vector& d, double grad_dot_d, double D,
                                  const SolverConfig& cfg, EvalCounters& counters) {
  if (!(grad_dot_d < 0))
    throw std::invalid_argument(
        "armijo_search: grad_dot_d must be negative (descent direction), got " +
        std::to_string(grad_dot_d));
  ArmijoResult r;
  double alpha = cfg.ls.alpha_bar;
  for (int l = 0; l < cfg.ls.max_backtracks; ++l, alpha *= cfg.ls.rho) {
    MeritEval trial = eval_merit(p, x + alpha * d, counters, /*with_gradient=*/false);
    r.trials.push_back(std::move(trial));
    if (r.trials.back().psi <= D + cfg.ls.sigma * alpha * grad_dot_d) {
      r.accepted = true;
      r.alpha = alpha;
      r.backtracks = l;
      return r;
    }
  }
  r.backtracks = cfg.ls.max_backtracks;
  return r;
}

namespace detail {

inline void finish(SolveReport& rep, const MeritEval& e, const EvalCounters& c,
                   long k, std::chrono::steady_clock::time_point t0) {
  rep.x_final = e.x;
  rep.hnorm = e.hnorm;
  rep.gnorm = e.has_gradient ? e.gnorm : std::numeric_limits<double>::quiet_NaN();
  rep.n_iter = k;
  rep.n_res = c.n_res;
  rep.n_jac = c.n_jac;
  rep.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// Levenberg-Marquardt with adaptive regularisation and a nonmonotone Armijo
// line search.  Each iteration solves (J^T J + mu_k I) d = -J^T h, backtracks
// until the nonmonotone sufficient-decrease test holds, then relaxes the
// reference value D towards the new merit value.
inline SolveReport lmls_solve(const NlsProblem& p, const Vector& x0,
                              const SolverConfig& cfg = {}) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  EvalCounters counters;
  long k = 0;
  try {
    MeritEval e = eval_merit(p, x0, counters);
    const MeritEval start = e;
    double D = e.psi;
    for (;;) {
      if (auto st = check_stop(e, start, cfg.eps, cfg.rel)) {
        rep.status = *st;
        break;
      }
      if (k >= cfg.max_iter) {
        rep.status = Status::MaxIterations;
        break;
      }
      const double mu = compute_mu(cfg.mu, k, e.hnorm, e.gnorm);
      const Vector d = solve_lm_system(e.jac, e.h, mu);
      const double gdd = e.grad.dot(d);
      if (!(gdd < 0))
        throw numerical_breakdown("LM step lost descent: grad.dot(d) = " +
                                      std::to_string(gdd),
                                  e.x);
      ArmijoResult ls = armijo_search(p, e.x, d, gdd, D, cfg, counters);
      if (!ls.accepted) {
        rep.status = Status::LineSearchFailure;
        rep.message = "no step accepted after " +
                      std::to_string(cfg.ls.max_backtracks) + " backtracks";
        // report the best point seen among the rejected trials
        const MeritEval* best = &e;
        for (const MeritEval& t : ls.trials)
          if (t.psi < best->psi) best = &t;
        detail::finish(rep, *best, counters, k, t0);
        return rep;
      }
      const double theta = cfg.nm.at(k);
      rep.trace.push_back({k, e.psi, e.hnorm, e.gnorm, mu, ls.alpha, D, theta,
                           ls.backtracks,
                           std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN(), e.x});
      e = std::move(ls.trials.back());
      complete_gradient(p, e, counters);
      D = nonmonotone_update(D, theta, e.psi);
      ++k;
    }
    detail::finish(rep, e, counters, k, t0);
  } catch (const numerical_breakdown& nb) {
    rep.status = Status::NumericalBreakdown;
    rep.message = nb.what();
    MeritEval bad;
    bad.x = nb.where();
    bad.hnorm = std::numeric_limits<double>::quiet_NaN();
    detail::finish(rep, bad, counters, k, t0);
  }
  return rep;
}

}  // namespace holm
