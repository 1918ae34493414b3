#pragma once

#include <Eigen/Core>

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace holm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Termination states of a solver run.  The first two are the success states;
// everything else reports *why* the run stopped without meeting the tolerance.
enum class Status {
  ConvergedResidual,   // ||h(x)|| reached its threshold
  ConvergedGradient,   // ||J^T h|| reached its threshold (stationary point)
  MaxIterations,
  LineSearchFailure,   // backtracking exhausted without an acceptable step
  InnerLoopFailure,    // trust-region inner loop exhausted or model degenerate
  NumericalBreakdown,  // non-finite values encountered
};

constexpr const char* to_string(Status s) {
  switch (s) {
    case Status::ConvergedResidual:  return "ConvergedResidual";
    case Status::ConvergedGradient:  return "ConvergedGradient";
    case Status::MaxIterations:      return "MaxIterations";
    case Status::LineSearchFailure:  return "LineSearchFailure";
    case Status::InnerLoopFailure:   return "InnerLoopFailure";
    case Status::NumericalBreakdown: return "NumericalBreakdown";
  }
  return "Unknown";
}

constexpr bool is_converged(Status s) {
  return s == Status::ConvergedResidual || s == Status::ConvergedGradient;
}

// Thrown when an evaluation produces non-finite values (overflow, NaN).
// Carries the offending point so drivers can report where things went wrong.
class numerical_breakdown : public std::runtime_error {
 public:
  numerical_breakdown(const std::string& what, Vector x)
      : std::runtime_error(what), x_(std::move(x)) {}
  const Vector& where() const noexcept { return x_; }

 private:
  Vector x_;
};

// A nonlinear least-squares problem: find x with h(x) = 0, h : R^m -> R^p.
// `jacobian` returns J with J(i,j) = d h_i / d x_j, i.e. p rows, m columns.
struct NlsProblem {
  std::string name;
  int dim_x = 0;  // m, number of unknowns
  int dim_h = 0;  // p, number of residual components
  std::function<Vector(const Vector&)> residual;
  std::function<Matrix(const Vector&)> jacobian;
  Vector x0;  // suggested starting point (nontrivial for the built-ins)
};

// Residual / Jacobian evaluation counters, owned by the caller so that trial
// evaluations inside line searches are attributed to the run that made them.
struct EvalCounters {
  long n_res = 0;  // residual evaluations (N_f)
  long n_jac = 0;  // Jacobian evaluations (N_j)
};

// One evaluated point.  `grad` and `gnorm` are only meaningful when
// `has_gradient` is set; cheap trial evaluations skip the Jacobian.
struct MeritEval {
  Vector x;
  Vector h;
  double psi = 0;    // 0.5 * ||h||^2
  double hnorm = 0;  // ||h||
  Matrix jac;        // J, dim_h x dim_x
  Vector grad;       // J^T h
  double gnorm = 0;  // ||J^T h||
  bool has_gradient = false;
};

// Per-iteration trace entry.  Fields that only apply to one driver are NaN on
// the other (r_hat/pred for line search, none for trust region).
struct TraceRecord {
  long k = 0;
  double psi = 0;     // psi(x_k)
  double hnorm = 0;   // ||h(x_k)||
  double gnorm = 0;   // ||grad psi(x_k)||
  double mu = 0;      // regularisation actually used (mu_k, or mu_hat_k)
  double step = 0;    // alpha_k (line search) or lambda_k after the inner loop
  double D = 0;       // nonmonotone reference value used at iteration k
  double theta = 0;   // theta_k used to form D_{k+1}
  int trials = 0;     // backtracks (line search) or rejections (trust region)
  double r_hat = 0;   // accepted ratio (trust region only)
  double pred = 0;    // predicted reduction of the accepted step (trust region)
  Vector x;           // x_k
};

struct SolveReport {
  Status status = Status::MaxIterations;
  Vector x_final;
  double hnorm = 0;
  double gnorm = 0;
  long n_iter = 0;  // N_i, accepted iterations
  long n_res = 0;   // N_f
  long n_jac = 0;   // N_j
  double seconds = 0;
  std::vector<TraceRecord> trace;
  std::string message;

  bool converged() const { return is_converged(status); }
};

}  // namespace holm
