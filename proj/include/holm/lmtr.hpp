#pragma once

#include <chrono>
#include <cmath>
#include <limits>

#include "holm/core.hpp"
#include "holm/lmls.hpp"  // nonmonotone_update, detail::finish

namespace holm {

// Reduction of the Gauss-Newton model q(d) = 0.5 ||J d + h||^2 relative to
// q(0); positive whenever d is a proper LM step with J^T h != 0.
inline double predicted_reduction(const Matrix& J, const Vector& h, const Vector& d) {
  if (J.rows() != h.size() || J.cols() != d.size())
    throw std::invalid_argument("predicted_reduction: inconsistent dimensions");
  return 0.5 * (h.squaredNorm() - (J * d + h).squaredNorm());
}

// Raised when the model predicts (numerically) no reduction; the driver maps
// it to Status::InnerLoopFailure.
class degenerate_model : public std::runtime_error {
 public:
  explicit degenerate_model(double pred)
      : std::runtime_error("trust-region model predicts no reduction (pred = " +
                           std::to_string(pred) + ")") {}
};

// Acceptance ratio of a trial step, measured against the nonmonotone
// reference D rather than psi(x_k):  r_hat = (D - psi(x+d)) / pred.
// Since D >= psi(x_k), r_hat dominates the classical monotone ratio.
inline double ratio_hat(double D, double psi_trial, double pred) {
  if (!(pred > 1e-300)) throw degenerate_model(pred);
  return (D - psi_trial) / pred;
}

// Three-branch scaling update:  grow on rejection, shrink after a very
// successful step, keep otherwise.
inline double lambda_update(double lambda, double r_hat,
                            const TrustRegionParams& tr) {
  if (r_hat < tr.upsilon1) return tr.rho1 * lambda;
  if (r_hat >= tr.upsilon2) return tr.rho2 * lambda;
  return lambda;
}

// Levenberg-Marquardt with a nonmonotone trust-region acceptance test.  The
// regularisation actually used is mu_hat = max(mu_min, lambda_k mu_k); the
// inner loop inflates lambda (once per rejected trial) until the step earns
// r_hat >= upsilon1, and the reference value D relaxes only on acceptance.
inline SolveReport lmtr_solve(const NlsProblem& p, const Vector& x0,
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
    double lambda = cfg.tr.lambda0;
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

      MeritEval trial;
      double mu_hat = 0, pred = 0, r_hat = 0;
      int rejections = 0;
      bool accepted = false;
      std::string inner_diag;
      try {
        for (;;) {
          mu_hat = std::max(cfg.tr.mu_min, lambda * mu);
          const Vector d = solve_lm_system(e.jac, e.h, mu_hat);
          pred = predicted_reduction(e.jac, e.h, d);
          trial = eval_merit(p, e.x + d, counters, /*with_gradient=*/false);
          r_hat = ratio_hat(D, trial.psi, pred);
          if (r_hat >= cfg.tr.upsilon1) {
            accepted = true;
            break;
          }
          if (++rejections > cfg.tr.max_inner) {
            inner_diag = "no step accepted after " + std::to_string(rejections) +
                         " rejections (last r_hat = " + std::to_string(r_hat) + ")";
            break;
          }
          lambda = lambda_update(lambda, r_hat, cfg.tr);  // r_hat < upsilon1 branch
        }
      } catch (const degenerate_model& dm) {
        inner_diag = dm.what();
      }
      if (!accepted) {
        rep.status = Status::InnerLoopFailure;
        rep.message = inner_diag;
        detail::finish(rep, e, counters, k, t0);
        return rep;
      }

      const double theta = cfg.nm.at(k);
      rep.trace.push_back({k, e.psi, e.hnorm, e.gnorm, mu_hat, lambda, D, theta,
                           rejections, r_hat, pred, e.x});
      e = std::move(trial);
      complete_gradient(p, e, counters);
      lambda = lambda_update(lambda, r_hat, cfg.tr);
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
