#pragma once

#include <string>
#include <vector>

#include "holm/lmls.hpp"
#include "holm/lmtr.hpp"

namespace holm {

// The two iteration drivers; which regularisation weight they use is part of
// the SolverConfig.
enum class Driver { LineSearch, TrustRegion };

struct SolverSpec {
  std::string name;
  Driver driver = Driver::LineSearch;
  SolverConfig cfg;
};

inline SolveReport run_solver(const SolverSpec& s, const NlsProblem& p,
                              const Vector& x0) {
  return s.driver == Driver::LineSearch ? lmls_solve(p, x0, s.cfg)
                                        : lmtr_solve(p, x0, s.cfg);
}

inline const std::vector<std::string>& solver_names() {
  static const std::vector<std::string> names = {"lmls", "lmtr", "lm-yf",
                                                 "lm-fy", "levmar"};
  return names;
}

// Named solver configurations:
//   lmls   — line search, adaptive mu = xi ||h||^eta + omega ||grad||^eta
//   lmtr   — trust region, same adaptive mu
//   lm-yf  — line search with mu = ||h||^2
//   lm-fy  — line search with mu = ||h||
//   levmar — trust region with mu = ||grad||
inline SolverSpec make_solver(const std::string& name, double eta = 1.2) {
  SolverSpec s;
  s.name = name;
  if (name == "lmls") {
    s.driver = Driver::LineSearch;
    s.cfg.mu = MuStrategy::adaptive(eta);
  } else if (name == "lmtr") {
    s.driver = Driver::TrustRegion;
    s.cfg.mu = MuStrategy::adaptive(eta);
  } else if (name == "lm-yf") {
    s.driver = Driver::LineSearch;
    s.cfg.mu = MuStrategy::yf();
  } else if (name == "lm-fy") {
    s.driver = Driver::LineSearch;
    s.cfg.mu = MuStrategy::fy();
  } else if (name == "levmar") {
    s.driver = Driver::TrustRegion;
    s.cfg.mu = MuStrategy::grad_norm();
  } else {
    std::string msg = "unknown solver '" + name + "'; available:";
    for (const auto& n : solver_names()) msg += " " + n;
    throw std::invalid_argument(msg);
  }
  return s;
}

inline std::vector<SolverSpec> default_solvers(double eta = 1.2) {
  std::vector<SolverSpec> out;
  for (const auto& n : solver_names()) out.push_back(make_solver(n, eta));
  return out;
}

}  // namespace holm
