// Acceptance gate: one PASS/FAIL line per release criterion, exit 0 only if
// everything passes.  Each check re-derives its expectations independently of
// the library internals (hand formulas, brute-force counters, re-evaluation).

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "holm/holm.hpp"
#include "oracle_utils.hpp"

using namespace holm;

namespace {

int failures = 0;

void run_check(const std::string& name,
               const std::function<std::string()>& body) {
  std::string detail;
  try {
    detail = body();  // empty string means pass
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  if (detail.empty()) {
    std::cout << "PASS " << name << '\n';
  } else {
    std::cout << "FAIL " << name << " (" << detail << ")\n";
    ++failures;
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::vector<NlsProblem> builtin_suite() {
  std::vector<NlsProblem> out;
  for (const auto& n : builtin_names()) out.push_back(builtin_problem(n));
  return out;
}

// ---- 1. descent invariant on random LM systems ----------------------------

std::string check_descent() {
  const auto t0 = std::chrono::steady_clock::now();
  auto gen = oracle::rng(11);
  std::uniform_int_distribution<int> dim(1, 8);
  std::uniform_real_distribution<double> logmu(-6, 2);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = dim(gen), n = dim(gen);
    const Matrix J = oracle::random_matrix(gen, m, n);
    const Vector h = oracle::random_vector(gen, m);
    const double mu = std::pow(10.0, logmu(gen));
    const Vector g = J.transpose() * h;
    const Vector d = solve_lm_system(J, h, mu);
    const Vector resid = (J.transpose() * J + mu * Matrix::Identity(n, n)) * d + g;
    if (resid.norm() > 1e-10 * std::max(1.0, g.norm()))
      return "trial " + std::to_string(trial) + ": linear-system residual " +
             fmt(resid.norm());
    if (g.norm() > 1e-12 && !(g.dot(d) < 0))
      return "trial " + std::to_string(trial) +
             ": not a descent direction, grad.d = " + fmt(g.dot(d));
  }
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (dt >= 5.0) return "took " + fmt(dt) + " s, budget is 5 s";
  return "";
}

// ---- 2. nonmonotone bookkeeping on every built-in trace --------------------

std::string check_bookkeeping() {
  for (const NlsProblem& p : builtin_suite()) {
    for (int alg = 0; alg < 2; ++alg) {
      const SolveReport rep =
          alg == 0 ? lmls_solve(p, p.x0) : lmtr_solve(p, p.x0);
      const char* tag = alg == 0 ? "/line-search" : "/trust-region";
      if (!rep.converged()) return p.name + tag + ": did not converge";
      for (size_t i = 0; i < rep.trace.size(); ++i) {
        const TraceRecord& t = rep.trace[i];
        if (!(t.psi <= t.D))
          return p.name + tag + ": psi > D at k=" + std::to_string(t.k);
        if (i > 0 && !(t.D <= rep.trace[i - 1].D))
          return p.name + tag + ": D increased at k=" + std::to_string(t.k);
        if (i + 1 < rep.trace.size()) {
          const TraceRecord& n = rep.trace[i + 1];
          const double lhs = t.D - n.D;
          const double rhs = (1.0 - t.theta) * (t.D - n.psi);
          if (std::abs(lhs - rhs) > 1e-12 * std::max(1.0, std::abs(t.D)))
            return p.name + tag + ": telescoping identity off by " +
                   fmt(std::abs(lhs - rhs)) + " at k=" + std::to_string(t.k);
        }
      }
    }
  }
  return "";
}

// ---- 3. convergence suite under the default stopping rule ------------------

std::string check_convergence_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  for (const NlsProblem& p : builtin_suite()) {
    for (int alg = 0; alg < 2; ++alg) {
      const SolveReport rep =
          alg == 0 ? lmls_solve(p, p.x0) : lmtr_solve(p, p.x0);
      if (!rep.converged())
        return p.name + (alg == 0 ? "/line-search" : "/trust-region") + ": " +
               to_string(rep.status);
    }
  }
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (dt >= 30.0) return "took " + fmt(dt) + " s, budget is 30 s";
  return "";
}

// ---- 4. superlinear tail on a zero-residual problem ------------------------

std::string check_superlinear() {
  const NlsProblem p = builtin_problem("rosenbrock_residual");
  SolverConfig cfg;
  cfg.eps = 1e-11;
  const SolveReport rep = lmls_solve(p, p.x0, cfg);
  if (!rep.converged()) return std::string("run failed: ") + to_string(rep.status);
  Vector star(2);
  star << 1, 1;
  std::vector<double> err;
  for (const TraceRecord& t : rep.trace) err.push_back((t.x - star).norm());
  err.push_back((rep.x_final - star).norm());
  // drop trailing entries already at rounding level
  while (err.size() > 1 && err.back() < 1e-14) err.pop_back();
  if (err.size() < 4) return "too few iterations to measure a tail";
  std::vector<double> ratio;
  for (size_t i = err.size() - 3; i < err.size(); ++i)
    ratio.push_back(err[i] / err[i - 1]);
  for (double r : ratio)
    if (!(r < 0.5))
      return "tail ratios " + fmt(ratio[0]) + ", " + fmt(ratio[1]) + ", " +
             fmt(ratio[2]) + " not all below 0.5";
  if (!(ratio[0] > ratio[1] && ratio[1] > ratio[2]))
    return "tail ratios " + fmt(ratio[0]) + ", " + fmt(ratio[1]) + ", " +
           fmt(ratio[2]) + " not strictly decreasing";
  return "";
}

// ---- 5. strictly monotone mapping always ends at a zero --------------------

std::string check_monotone_mapping() {
  const NlsProblem p = builtin_problem("exp_monotone");
  auto gen = oracle::rng(55);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector x0(3);
    for (int j = 0; j < 3; ++j) x0(j) = u(gen);
    for (int alg = 0; alg < 2; ++alg) {
      const SolveReport rep = alg == 0 ? lmls_solve(p, x0) : lmtr_solve(p, x0);
      if (rep.status != Status::ConvergedResidual)
        return "trial " + std::to_string(trial) +
               (alg == 0 ? "/line-search" : "/trust-region") + ": " +
               to_string(rep.status) + ", |h| = " + fmt(rep.hnorm);
    }
  }
  return "";
}

// ---- 6. steady-state mapping: solve quality and Jacobian consistency -------

std::string check_bio() {
  const NlsProblem ab = builtin_problem("bio_ab");
  SolverConfig tight;
  tight.eps = 1e-9;
  const SolveReport rep = lmls_solve(ab, ab.x0, tight);  // starts at (1, -1)
  if (!rep.converged()) return std::string("two-species: ") + to_string(rep.status);
  const Vector conc = rep.x_final.array().exp();
  const Vector target = Vector::Ones(2);
  if ((conc - target).norm() > 1e-8)
    return "two-species concentrations off by " + fmt((conc - target).norm());

  const NlsProblem chain = builtin_problem("bio_chain3");
  const SolveReport rep3 = lmtr_solve(chain, chain.x0);
  if (!rep3.converged()) return std::string("chain: ") + to_string(rep3.status);
  if (!(rep3.hnorm <= 1e-6)) return "chain residual " + fmt(rep3.hnorm);

  auto gen = oracle::rng(66);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const char* name : {"bio_ab", "bio_chain3"}) {
    const NlsProblem p = builtin_problem(name);
    for (int trial = 0; trial < 10; ++trial) {
      Vector x(p.dim_x);
      for (int j = 0; j < p.dim_x; ++j) x(j) = u(gen);
      const Matrix Ja = p.jacobian(x);
      const Matrix Jf = fd_jacobian(p, x);
      const double rel = (Jf - Ja).norm() / std::max(1.0, Ja.norm());
      if (rel > 1e-5)
        return std::string(name) + ": Jacobian mismatch " + fmt(rel);
    }
  }
  return "";
}

// ---- 7. trust-region mechanics on recorded traces --------------------------

std::string check_tr_mechanics() {
  const TrustRegionParams tr;
  for (const NlsProblem& p : builtin_suite()) {
    const SolveReport rep = lmtr_solve(p, p.x0);
    if (!rep.converged()) return p.name + ": " + to_string(rep.status);
    for (size_t i = 0; i < rep.trace.size(); ++i) {
      const TraceRecord& t = rep.trace[i];
      if (!(t.mu >= tr.mu_min * (1 - 1e-15)))
        return p.name + ": regularisation " + fmt(t.mu) + " below the floor";
      if (!(t.r_hat >= tr.upsilon1))
        return p.name + ": accepted step with ratio " + fmt(t.r_hat);
      const Vector& x_next =
          i + 1 < rep.trace.size() ? rep.trace[i + 1].x : rep.x_final;
      const double psi_next = 0.5 * p.residual(x_next).squaredNorm();
      const double lhs = t.r_hat * t.pred, rhs = t.D - psi_next;
      if (std::abs(lhs - rhs) > 1e-10 * std::max(1.0, std::abs(rhs)))
        return p.name + ": recorded ratio disagrees with re-evaluation at k=" +
               std::to_string(t.k);
      if (i + 1 < rep.trace.size()) {
        const TraceRecord& n = rep.trace[i + 1];
        double expect = lambda_update(t.step, t.r_hat, tr);
        for (int rej = 0; rej < n.trials; ++rej) expect *= tr.rho1;
        if (std::abs(n.step - expect) > 1e-12 * std::max(1.0, expect))
          return p.name + ": lambda chain broken at k=" + std::to_string(n.k);
      }
    }
  }
  return "";
}

// ---- 8. profile computation equals a brute-force counter -------------------

std::string check_profile_oracle() {
  auto gen = oracle::rng(88);
  std::uniform_int_distribution<int> np_d(1, 10), ns_d(1, 6), cost(0, 40);
  std::bernoulli_distribution fail(0.25);
  for (int trial = 0; trial < 50; ++trial) {
    const int np = np_d(gen), ns = ns_d(gen);
    MetricsTable table;
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < ns; ++j) {
        MetricsRow row;
        row.problem = "p" + std::to_string(i);
        row.solver = "s" + std::to_string(j);
        row.n_iter = cost(gen);
        row.n_res = 2 * row.n_iter + 1;
        row.status =
            fail(gen) ? Status::MaxIterations : Status::ConvergedResidual;
        table.rows.push_back(row);
      }
    const RatioTable rt = performance_ratios(table, Measure::Iterations);
    const auto grid = default_tau_grid(rt.r_failed, 60);
    const ProfileCurves pc = performance_profile(rt, grid);
    for (size_t g = 0; g < grid.size(); ++g)
      for (int s = 0; s < ns; ++s) {
        long count = 0;
        for (int i = 0; i < np; ++i)
          if (rt.r(i, s) <= grid[g]) ++count;
        const double want = static_cast<double>(count) / np;
        const double got = pc.rho(static_cast<Eigen::Index>(g), s);
        if (got != want)
          return "trial " + std::to_string(trial) + ": rho mismatch " +
                 fmt(got) + " vs " + fmt(want);
        if (!(got >= 0.0 && got <= 1.0))
          return "trial " + std::to_string(trial) + ": rho out of [0,1]";
        if (g > 0 && got < pc.rho(static_cast<Eigen::Index>(g - 1), s))
          return "trial " + std::to_string(trial) + ": rho not monotone";
      }
  }
  return "";
}

// ---- 9 & 10. command-line harness criteria ---------------------------------

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("holm_accept_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string("\"") + HOLM_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string check_eta_harness() {
  TempDir tmp;
  const fs::path dir = tmp.path / "tune";
  if (run_cli("tune-eta --out-dir " + dir.string()) != 0)
    return "tune-eta exited nonzero";
  for (const char* method : {"lmls", "lmtr"})
    for (const char* label : {"N_i", "N_f", "mixed", "T"}) {
      const fs::path f = dir / ("tune_" + std::string(method) + "_profile_" +
                                label + ".csv");
      if (!fs::exists(f)) return "missing " + f.filename().string();
      const ParsedProfile prof = read_profile_csv(f);
      if (prof.solvers.size() != 5)
        return f.filename().string() + ": expected 5 curves, found " +
               std::to_string(prof.solvers.size());
      if (prof.tau.empty() || prof.tau.front() != 1.0)
        return f.filename().string() + ": tau grid does not start at 1";
      for (Eigen::Index s = 0; s < prof.rho.cols(); ++s)
        for (Eigen::Index g = 0; g < prof.rho.rows(); ++g) {
          const double v = prof.rho(g, s);
          if (!(v >= 0.0 && v <= 1.0))
            return f.filename().string() + ": rho out of [0,1]";
          if (g > 0 && v < prof.rho(g - 1, s))
            return f.filename().string() + ": rho not monotone";
        }
    }
  return "";
}

std::string check_five_solver_grid() {
  TempDir tmp;
  const fs::path dir = tmp.path / "bench";
  if (run_cli("bench --out-dir " + dir.string()) != 0)
    return "bench exited nonzero";
  const MetricsTable table = read_metrics_csv(dir / "metrics.csv");
  if (table.rows.size() != 35)
    return "metrics.csv has " + std::to_string(table.rows.size()) +
           " rows, expected 35";
  for (const MetricsRow& r : table.rows)
    if (r.mixed() != r.n_res + 3 * r.n_iter)
      return r.problem + "/" + r.solver + ": mixed column mismatch";
  if (table.problems().size() != 7 || table.solvers().size() != 5)
    return "grid is not 7 problems x 5 solvers";
  return "";
}

}  // namespace

int main() {
  run_check("descent invariant: random LM systems yield descent directions",
            check_descent);
  run_check("nonmonotone bookkeeping: reference-value identities on all traces",
            check_bookkeeping);
  run_check("convergence suite: both methods solve every built-in problem",
            check_convergence_suite);
  run_check("superlinear tail: error ratios shrink below 0.5 and decrease",
            check_superlinear);
  run_check("monotone mapping: random starts always reach a residual zero",
            check_monotone_mapping);
  run_check("steady-state mapping: solves, moiety totals, Jacobian consistency",
            check_bio);
  run_check("trust-region mechanics: floors, ratios, and scaling chain",
            check_tr_mechanics);
  run_check("profile oracle: counting formula matches brute force exactly",
            check_profile_oracle);
  run_check("exponent sweep harness: five monotone curves per method and measure",
            check_eta_harness);
  run_check("five-solver comparison grid: 35 rows with exact mixed measure",
            check_five_solver_grid);
  if (failures) {
    std::cout << failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all acceptance criteria passed\n";
  return 0;
}
