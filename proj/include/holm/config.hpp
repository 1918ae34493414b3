#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace holm {

// Default relaxation schedule for the adaptive regularisation weights:
// xi_k stays at 0.95 while 0.95^k > 1e-2, then decays geometrically with a
// floor of 1e-10; omega_k = 1 - xi_k shifts the weight from the residual norm
// to the gradient norm as the run progresses.
struct XiOmega {
  double xi;
  double omega;
};

inline XiOmega xi_schedule(long k) {
  const double p = std::pow(0.95, static_cast<double>(k));
  const double xi = p > 1e-2 ? 0.95 : std::max(p, 1e-10);
  return {xi, 1.0 - xi};
}

// How the LM regularisation weight mu_k is formed from the current residual
// norm ||h|| and gradient norm ||J^T h||.
//
//   Adaptive: mu_k = xi_k ||h||^eta + omega_k ||J^T h||^eta
//   Yf:       mu_k = ||h||^2
//   Fy:       mu_k = ||h||
//   GradNorm: mu_k = ||J^T h||
struct MuStrategy {
  enum class Kind { Adaptive, Yf, Fy, GradNorm };

  Kind kind = Kind::Adaptive;
  double eta = 1.2;  // Hölder exponent of the adaptive rule

  // Schedules for the adaptive weights; empty means the defaults above.
  std::function<double(long)> xi;
  std::function<double(long)> omega;

  // Admissible ranges for schedule values, checked at every evaluation.
  double xi_min = 1e-10;
  double xi_max = 0.95;
  double omega_max = 1.0;

  static MuStrategy adaptive(double eta_ = 1.2) {
    MuStrategy s;
    s.kind = Kind::Adaptive;
    s.eta = eta_;
    return s;
  }
  static MuStrategy yf() { return MuStrategy{Kind::Yf}; }
  static MuStrategy fy() { return MuStrategy{Kind::Fy}; }
  static MuStrategy grad_norm() { return MuStrategy{Kind::GradNorm}; }

  MuStrategy() = default;
  explicit MuStrategy(Kind k) : kind(k) {}

  void validate() const {
    if (kind == Kind::Adaptive) {
      if (!(eta > 0))
        throw std::invalid_argument("MuStrategy: eta must be positive, got " +
                                    std::to_string(eta));
      if (!(xi_min > 0) || !(xi_min <= xi_max) || !(omega_max > 0))
        throw std::invalid_argument("MuStrategy: schedule bounds must satisfy "
                                    "0 < xi_min <= xi_max and omega_max > 0");
    }
  }

  double xi_at(long k) const {
    const double v = xi ? xi(k) : xi_schedule(k).xi;
    if (!(v >= xi_min) || !(v <= xi_max))
      throw std::invalid_argument("MuStrategy: xi schedule value " +
                                  std::to_string(v) + " outside [xi_min, xi_max]");
    return v;
  }
  double omega_at(long k) const {
    const double v = omega ? omega(k) : xi_schedule(k).omega;
    if (!(v >= 0) || !(v <= omega_max))
      throw std::invalid_argument("MuStrategy: omega schedule value " +
                                  std::to_string(v) + " outside [0, omega_max]");
    return v;
  }
};

struct LineSearchParams {
  double alpha_bar = 1.0;  // initial trial step
  double rho = 0.5;        // backtracking factor
  double sigma = 1e-2;     // sufficient-decrease coefficient
  int max_backtracks = 60;
};

struct TrustRegionParams {
  double lambda0 = 1e-2;  // initial scaling of mu_k
  double rho1 = 2.0;      // inflation on rejection (> 1)
  double rho2 = 0.5;      // deflation on a very successful step (in (0,1))
  double upsilon1 = 1e-4; // acceptance threshold for r_hat
  double upsilon2 = 0.9;  // "very successful" threshold
  double mu_min = 1e-8;   // floor for the scaled regularisation weight
  int max_inner = 60;     // rejections allowed per outer iteration
};

struct NonmonotoneParams {
  double theta = 0.95;      // constant memory weight, used when no schedule set
  double theta_min = 0.0;
  double theta_max = 0.95;
  std::function<double(long)> schedule;  // optional k -> theta_k

  double at(long k) const {
    const double v = schedule ? schedule(k) : theta;
    if (!(v >= theta_min) || !(v <= theta_max))
      throw std::invalid_argument("NonmonotoneParams: theta value " +
                                  std::to_string(v) +
                                  " outside [theta_min, theta_max]");
    return v;
  }
};

struct SolverConfig {
  double eps = 1e-6;   // absolute stopping tolerance
  double rel = 1e-12;  // relative stopping factor (scales the initial norms)
  long max_iter = 100000;
  MuStrategy mu;
  LineSearchParams ls;
  TrustRegionParams tr;
  NonmonotoneParams nm;

  void validate() const {
    mu.validate();
    if (!(eps > 0)) throw std::invalid_argument("SolverConfig: eps must be > 0");
    if (!(rel >= 0)) throw std::invalid_argument("SolverConfig: rel must be >= 0");
    if (max_iter < 0) throw std::invalid_argument("SolverConfig: max_iter must be >= 0");
    if (!(ls.alpha_bar > 0))
      throw std::invalid_argument("SolverConfig: alpha_bar must be > 0");
    if (!(ls.rho > 0 && ls.rho < 1))
      throw std::invalid_argument("SolverConfig: rho must lie in (0,1)");
    if (!(ls.sigma > 0 && ls.sigma < 1))
      throw std::invalid_argument("SolverConfig: sigma must lie in (0,1)");
    if (ls.max_backtracks < 1)
      throw std::invalid_argument("SolverConfig: max_backtracks must be >= 1");
    if (!(tr.lambda0 > 0))
      throw std::invalid_argument("SolverConfig: lambda0 must be > 0");
    if (!(tr.rho1 > 1))
      throw std::invalid_argument("SolverConfig: rho1 must be > 1");
    if (!(tr.rho2 > 0 && tr.rho2 < 1))
      throw std::invalid_argument("SolverConfig: rho2 must lie in (0,1)");
    if (!(tr.upsilon1 > 0 && tr.upsilon1 < tr.upsilon2 && tr.upsilon2 < 1))
      throw std::invalid_argument(
          "SolverConfig: need 0 < upsilon1 < upsilon2 < 1");
    if (!(tr.mu_min > 0))
      throw std::invalid_argument("SolverConfig: mu_min must be > 0");
    if (tr.max_inner < 1)
      throw std::invalid_argument("SolverConfig: max_inner must be >= 1");
    if (!(nm.theta_min >= 0 && nm.theta_min <= nm.theta_max && nm.theta_max < 1))
      throw std::invalid_argument(
          "SolverConfig: need 0 <= theta_min <= theta_max < 1");
  }
};

}  // namespace holm
