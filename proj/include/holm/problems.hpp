#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "holm/bio.hpp"
#include "holm/types.hpp"

namespace holm {

// Central-difference Jacobian, the verification oracle for analytic
// Jacobians.  step <= 0 selects the default 1e-6 * max(1, ||x||).
inline Matrix fd_jacobian(const NlsProblem& p, const Vector& x, double step = 0) {
  if (step < 0) throw std::invalid_argument("fd_jacobian: step must be positive");
  const double s = step > 0 ? step : 1e-6 * std::max(1.0, x.norm());
  Matrix J(p.dim_h, p.dim_x);
  Vector xp = x, xm = x;
  for (int j = 0; j < p.dim_x; ++j) {
    xp[j] = x[j] + s;
    xm[j] = x[j] - s;
    J.col(j) = (p.residual(xp) - p.residual(xm)) / (2 * s);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return J;
}

namespace builtin {

inline NlsProblem linear() {
  NlsProblem p;
  p.name = "linear";
  p.dim_x = p.dim_h = 2;
  Matrix A(2, 2);
  A << 3, 1, 1, 2;
  Vector b(2);
  b << 1, 2;
  p.residual = [A, b](const Vector& x) -> Vector { return A * x - b; };
  p.jacobian = [A](const Vector&) { return A; };
  p.x0 = Vector::Zero(2);
  return p;
}

// h(x) = x^3: the Jacobian vanishes at the zero, so the zero is only
// Hölder-subregular (exponent 1/3) rather than Lipschitz.
inline NlsProblem cubic() {
  NlsProblem p;
  p.name = "cubic";
  p.dim_x = p.dim_h = 1;
  p.residual = [](const Vector& x) {
    Vector h(1);
    h[0] = x[0] * x[0] * x[0];
    return h;
  };
  p.jacobian = [](const Vector& x) {
    Matrix J(1, 1);
    J(0, 0) = 3 * x[0] * x[0];
    return J;
  };
  p.x0 = Vector::Ones(1);
  return p;
}

// Zero set is the whole unit circle: no isolated solutions.
inline NlsProblem circle() {
  NlsProblem p;
  p.name = "circle";
  p.dim_x = 2;
  p.dim_h = 1;
  p.residual = [](const Vector& x) {
    Vector h(1);
    h[0] = x[0] * x[0] + x[1] * x[1] - 1;
    return h;
  };
  p.jacobian = [](const Vector& x) {
    Matrix J(1, 2);
    J << 2 * x[0], 2 * x[1];
    return J;
  };
  p.x0 = (Vector(2) << 2, 0).finished();
  return p;
}

// Zero-residual least-squares form of the Rosenbrock function; the Jacobian
// is nonsingular at the solution (1,1), so fast local rates are observable.
inline NlsProblem rosenbrock_residual() {
  NlsProblem p;
  p.name = "rosenbrock_residual";
  p.dim_x = p.dim_h = 2;
  p.residual = [](const Vector& x) {
    Vector h(2);
    h[0] = 10 * (x[1] - x[0] * x[0]);
    h[1] = 1 - x[0];
    return h;
  };
  p.jacobian = [](const Vector& x) {
    Matrix J(2, 2);
    J << -20 * x[0], 10, -1, 0;
    return J;
  };
  p.x0 = (Vector(2) << -1.2, 1).finished();
  return p;
}

// Componentwise exp(x) - 1: strictly monotone, unique zero at the origin.
inline NlsProblem exp_monotone() {
  NlsProblem p;
  p.name = "exp_monotone";
  p.dim_x = p.dim_h = 3;
  p.residual = [](const Vector& x) -> Vector {
    return x.array().exp() - 1.0;
  };
  p.jacobian = [](const Vector& x) -> Matrix {
    return Vector(x.array().exp()).asDiagonal();
  };
  p.x0 = (Vector(3) << 1, -1, 0.5).finished();
  return p;
}

// A <=> B with unit rate constants; conservation A + B = 2 fixes the steady
// state at concentrations (1, 1), i.e. x = (0, 0) in log space.
inline NlsProblem bio_ab() {
  IntMatrix F(2, 1), R(2, 1);
  F << 1, 0;
  R << 0, 1;
  auto net = std::make_shared<BioNetwork>(
      make_bio_network("bio_ab", F, R, Vector::Zero(2), Vector::Constant(1, 2.0)));
  return make_problem(net, (Vector(2) << 1, -1).finished());
}

// Three-species chain A <=> B <=> C, unit rates, totals from c0 = (1,1,1).
inline NlsProblem bio_chain3() {
  IntMatrix F(3, 2), R(3, 2);
  F << 1, 0, 0, 1, 0, 0;
  R << 0, 0, 1, 0, 0, 1;
  BioNetwork probe;
  probe.F = F;
  probe.R = R;
  derive_network(probe);
  const Vector l0 = probe.L * Vector::Ones(3);
  auto net = std::make_shared<BioNetwork>(
      make_bio_network("bio_chain3", F, R, Vector::Zero(4), l0));
  return make_problem(net, (Vector(3) << 0.5, -0.3, 0.2).finished());
}

}  // namespace builtin

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {
      "linear",       "cubic",       "circle", "rosenbrock_residual",
      "exp_monotone", "bio_ab",      "bio_chain3"};
  return names;
}

inline NlsProblem builtin_problem(const std::string& name) {
  if (name == "linear") return builtin::linear();
  if (name == "cubic") return builtin::cubic();
  if (name == "circle") return builtin::circle();
  if (name == "rosenbrock_residual") return builtin::rosenbrock_residual();
  if (name == "exp_monotone") return builtin::exp_monotone();
  if (name == "bio_ab") return builtin::bio_ab();
  if (name == "bio_chain3") return builtin::bio_chain3();
  std::string msg = "unknown problem '" + name + "'; available:";
  for (const auto& n : builtin_names()) msg += " " + n;
  throw std::invalid_argument(msg);
}

}  // namespace holm
