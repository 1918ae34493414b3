#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <optional>
#include <string>

#include "holm/config.hpp"
#include "holm/types.hpp"

namespace holm {

// Evaluate the merit function psi(x) = 0.5 ||h(x)||^2 and, when requested,
// the gradient J(x)^T h(x).  Counts one residual evaluation (and one Jacobian
// evaluation if requested) against `counters`.  Non-finite values abort the
// run via numerical_breakdown.
inline MeritEval eval_merit(const NlsProblem& p, const Vector& x,
                            EvalCounters& counters, bool with_gradient = true) {
  if (x.size() != p.dim_x)
    throw std::invalid_argument("eval_merit: x has size " +
                                std::to_string(x.size()) + ", problem expects " +
                                std::to_string(p.dim_x));
  MeritEval e;
  e.x = x;
  e.h = p.residual(x);
  ++counters.n_res;
  if (e.h.size() != p.dim_h)
    throw std::invalid_argument("eval_merit: residual has size " +
                                std::to_string(e.h.size()) +
                                ", problem declares " + std::to_string(p.dim_h));
  if (!e.h.allFinite())
    throw numerical_breakdown("residual evaluation produced non-finite values", x);
  e.hnorm = e.h.norm();
  e.psi = 0.5 * e.hnorm * e.hnorm;
  if (!std::isfinite(e.psi))
    throw numerical_breakdown("merit value overflowed", x);
  if (with_gradient) {
    e.jac = p.jacobian(x);
    ++counters.n_jac;
    if (e.jac.rows() != p.dim_h || e.jac.cols() != p.dim_x)
      throw std::invalid_argument("eval_merit: Jacobian is " +
                                  std::to_string(e.jac.rows()) + "x" +
                                  std::to_string(e.jac.cols()) + ", expected " +
                                  std::to_string(p.dim_h) + "x" +
                                  std::to_string(p.dim_x));
    if (!e.jac.allFinite())
      throw numerical_breakdown("Jacobian evaluation produced non-finite values", x);
    e.grad = e.jac.transpose() * e.h;
    e.gnorm = e.grad.norm();
    if (!std::isfinite(e.gnorm))
      throw numerical_breakdown("gradient norm overflowed", x);
    e.has_gradient = true;
  }
  return e;
}

// Attach the gradient to a residual-only evaluation (after a trial point has
// been accepted), reusing the already-computed h.  Counts one Jacobian
// evaluation and no residual evaluation.
inline void complete_gradient(const NlsProblem& p, MeritEval& e,
                              EvalCounters& counters) {
  if (e.has_gradient) return;
  e.jac = p.jacobian(e.x);
  ++counters.n_jac;
  if (e.jac.rows() != p.dim_h || e.jac.cols() != p.dim_x)
    throw std::invalid_argument("complete_gradient: Jacobian has wrong shape");
  if (!e.jac.allFinite())
    throw numerical_breakdown("Jacobian evaluation produced non-finite values", e.x);
  e.grad = e.jac.transpose() * e.h;
  e.gnorm = e.grad.norm();
  if (!std::isfinite(e.gnorm))
    throw numerical_breakdown("gradient norm overflowed", e.x);
  e.has_gradient = true;
}

// Regularisation weight for iteration k.
inline double compute_mu(const MuStrategy& s, long k, double hnorm, double gnorm) {
  if (!std::isfinite(hnorm) || !std::isfinite(gnorm))
    throw numerical_breakdown("compute_mu: non-finite norms", Vector());
  switch (s.kind) {
    case MuStrategy::Kind::Yf:       return hnorm * hnorm;
    case MuStrategy::Kind::Fy:       return hnorm;
    case MuStrategy::Kind::GradNorm: return gnorm;
    case MuStrategy::Kind::Adaptive: break;
  }
  const double mu = s.xi_at(k) * std::pow(hnorm, s.eta) +
                    s.omega_at(k) * std::pow(gnorm, s.eta);
  if (!std::isfinite(mu))
    throw numerical_breakdown("compute_mu: regularisation weight overflowed",
                              Vector());
  return mu;
}

// Solve (J^T J + mu I) d = -J^T h by dense Cholesky.  mu > 0 makes the matrix
// symmetric positive definite for any J.  One step of iterative refinement
// keeps the residual of the normal equations at working accuracy even for
// ill-conditioned J.
inline Vector solve_lm_system(const Matrix& J, const Vector& h, double mu) {
  if (!(mu > 0))
    throw std::invalid_argument("solve_lm_system: mu must be positive, got " +
                                std::to_string(mu));
  if (J.rows() != h.size())
    throw std::invalid_argument("solve_lm_system: J has " +
                                std::to_string(J.rows()) + " rows but h has " +
                                std::to_string(h.size()) + " entries");
  const Eigen::Index m = J.cols();
  Matrix A = Matrix::Zero(m, m);
  A.selfadjointView<Eigen::Lower>().rankUpdate(J.transpose());
  A.diagonal().array() += mu;
  const Vector g = J.transpose() * h;

  Eigen::LLT<Matrix> llt(A.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success)
    throw numerical_breakdown("solve_lm_system: Cholesky factorisation failed",
                              Vector());
  Vector d = llt.solve(-g);

  const double tol = 1e-10 * std::max(1.0, g.norm());
  for (int pass = 0; pass < 2; ++pass) {
    const Vector res = A.selfadjointView<Eigen::Lower>() * d + g;
    if (res.norm() <= tol) break;
    d -= llt.solve(res);
  }
  if (!d.allFinite())
    throw numerical_breakdown("solve_lm_system: non-finite step", Vector());
  return d;
}

// Dual stopping test: small residual wins over small gradient when both hold.
// Thresholds combine the absolute tolerance with a relative one against the
// starting point, so runs that begin huge still terminate sensibly.
inline std::optional<Status> check_stop(const MeritEval& e, const MeritEval& e0,
                                        double eps, double rel = 1e-12) {
  if (e.hnorm <= std::max(eps, rel * e0.hnorm)) return Status::ConvergedResidual;
  if (e.gnorm <= std::max(eps, rel * e0.gnorm)) return Status::ConvergedGradient;
  return std::nullopt;
}

}  // namespace holm
