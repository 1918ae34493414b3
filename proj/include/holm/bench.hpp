#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "holm/solvers.hpp"

namespace holm {

namespace fs = std::filesystem;

enum class Measure { Iterations, Evaluations, Mixed, Time };

inline const char* measure_label(Measure m) {
  switch (m) {
    case Measure::Iterations:  return "N_i";
    case Measure::Evaluations: return "N_f";
    case Measure::Mixed:       return "mixed";
    case Measure::Time:        return "T";
  }
  return "?";
}

inline Measure parse_measure(const std::string& s) {
  if (s == "N_i") return Measure::Iterations;
  if (s == "N_f") return Measure::Evaluations;
  if (s == "mixed") return Measure::Mixed;
  if (s == "T") return Measure::Time;
  throw std::invalid_argument("unknown measure '" + s +
                              "'; available: N_i N_f mixed T");
}

inline const std::vector<Measure>& all_measures() {
  static const std::vector<Measure> ms = {Measure::Iterations, Measure::Evaluations,
                                          Measure::Mixed, Measure::Time};
  return ms;
}

struct MetricsRow {
  std::string problem;
  std::string solver;
  Status status = Status::MaxIterations;
  long n_iter = 0;
  long n_res = 0;
  double seconds = 0;
  double hnorm = 0;
  double gnorm = 0;

  bool solved() const { return is_converged(status); }
  long mixed() const { return n_res + 3 * n_iter; }
};

struct MetricsTable {
  std::vector<MetricsRow> rows;

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
      if (std::find(out.begin(), out.end(), r.problem) == out.end())
        out.push_back(r.problem);
    return out;
  }
  std::vector<std::string> solvers() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
      if (std::find(out.begin(), out.end(), r.solver) == out.end())
        out.push_back(r.solver);
    return out;
  }
};

// Run every (problem, solver) cell of the grid.  Cells are independent; with
// jobs > 1 they run on a thread pool, each owning copies of its problem and
// config, and the table is assembled afterwards in grid order.  All solvers
// see the same starting point: the problem's own x0.
inline MetricsTable run_benchmark(const std::vector<NlsProblem>& problems,
                                  const std::vector<SolverSpec>& solvers,
                                  int jobs = 1) {
  if (problems.empty() || solvers.empty())
    throw std::invalid_argument("run_benchmark: empty problem or solver list");
  const size_t ncells = problems.size() * solvers.size();
  std::vector<MetricsRow> rows(ncells);
  const auto run_cell = [&](size_t idx) {
    const NlsProblem problem = problems[idx / solvers.size()];
    const SolverSpec spec = solvers[idx % solvers.size()];
    const auto t0 = std::chrono::steady_clock::now();
    SolveReport rep = run_solver(spec, problem, problem.x0);
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    rows[idx] = {problem.name, spec.name, rep.status, rep.n_iter,
                 rep.n_res,    dt,        rep.hnorm,  rep.gnorm};
  };
  if (jobs <= 1) {
    for (size_t i = 0; i < ncells; ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < ncells; i = next.fetch_add(1))
          run_cell(i);
      });
    for (auto& th : pool) th.join();
  }
  MetricsTable table;
  table.rows = std::move(rows);
  return table;
}

inline double measure_value(const MetricsRow& r, Measure m) {
  switch (m) {
    case Measure::Iterations:  return static_cast<double>(r.n_iter);
    case Measure::Evaluations: return static_cast<double>(r.n_res);
    case Measure::Mixed:       return static_cast<double>(r.mixed());
    case Measure::Time:        return r.seconds;
  }
  return 0;
}

struct RatioTable {
  std::vector<std::string> problems;
  std::vector<std::string> solvers;
  Matrix r;  // problems x solvers
  double r_failed = 2.0;
  std::vector<std::string> warnings;
};

// Dolan-Moré performance ratios: each entry divided by its row minimum over
// the solvers that actually solved the problem.  Failed cells are assigned
// r_failed = 2 x (largest finite ratio), which exceeds every finite entry.
inline RatioTable performance_ratios(const MetricsTable& table, Measure measure) {
  RatioTable out;
  out.problems = table.problems();
  out.solvers = table.solvers();
  const size_t np = out.problems.size(), ns = out.solvers.size();
  Matrix t = Matrix::Constant(np, ns, std::nan(""));
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> ok(np, ns);
  ok.setConstant(false);
  for (const auto& row : table.rows) {
    const size_t i = std::find(out.problems.begin(), out.problems.end(), row.problem) -
                     out.problems.begin();
    const size_t j = std::find(out.solvers.begin(), out.solvers.end(), row.solver) -
                     out.solvers.begin();
    t(i, j) = measure_value(row, measure);
    ok(i, j) = row.solved();
  }
  out.r = Matrix::Constant(np, ns, std::nan(""));
  double max_finite = 1.0;
  for (size_t i = 0; i < np; ++i) {
    double tmin = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < ns; ++j)
      if (ok(i, j)) tmin = std::min(tmin, t(i, j));
    if (!std::isfinite(tmin)) {
      out.warnings.push_back("no solver solved problem '" + out.problems[i] + "'");
      continue;  // whole row becomes r_failed below
    }
    for (size_t j = 0; j < ns; ++j) {
      if (!ok(i, j)) continue;
      // zero-cost solves (possible for integer measures) tie at ratio 1
      out.r(i, j) = tmin > 0 ? t(i, j) / tmin : (t(i, j) <= 0 ? 1.0 : t(i, j));
      max_finite = std::max(max_finite, out.r(i, j));
    }
  }
  out.r_failed = 2.0 * max_finite;
  for (size_t i = 0; i < np; ++i)
    for (size_t j = 0; j < ns; ++j)
      if (std::isnan(out.r(i, j))) out.r(i, j) = out.r_failed;
  return out;
}

inline std::vector<double> default_tau_grid(double r_failed, int points = 200) {
  if (points < 2) return {1.0};
  std::vector<double> tau(points);
  const double top = std::log(std::max(r_failed, 1.0 + 1e-12));
  for (int i = 0; i < points; ++i)
    tau[i] = std::exp(top * i / (points - 1));
  tau.front() = 1.0;
  return tau;
}

struct ProfileCurves {
  Measure measure = Measure::Iterations;
  std::vector<double> tau;
  std::vector<std::string> solvers;
  Matrix rho;  // tau grid x solvers
  double r_failed = 2.0;
};

// rho_s(tau) = (1/n_p) |{p : r_{p,s} <= tau}| evaluated on the given grid.
inline ProfileCurves performance_profile(const RatioTable& ratios,
                                         std::vector<double> tau_grid) {
  if (tau_grid.empty())
    throw std::invalid_argument("performance_profile: empty tau grid");
  if (std::abs(tau_grid.front() - 1.0) > 1e-12)
    throw std::invalid_argument("performance_profile: tau grid must start at 1");
  for (size_t i = 1; i < tau_grid.size(); ++i)
    if (tau_grid[i] < tau_grid[i - 1])
      throw std::invalid_argument("performance_profile: tau grid must be sorted");
  ProfileCurves out;
  out.tau = std::move(tau_grid);
  out.solvers = ratios.solvers;
  out.r_failed = ratios.r_failed;
  const Eigen::Index np = ratios.r.rows(), ns = ratios.r.cols();
  out.rho = Matrix::Zero(static_cast<Eigen::Index>(out.tau.size()), ns);
  for (size_t g = 0; g < out.tau.size(); ++g)
    for (Eigen::Index s = 0; s < ns; ++s) {
      long count = 0;
      for (Eigen::Index p = 0; p < np; ++p)
        if (ratios.r(p, s) <= out.tau[g]) ++count;
      out.rho(static_cast<Eigen::Index>(g), s) =
          np > 0 ? static_cast<double>(count) / static_cast<double>(np) : 0.0;
    }
  return out;
}

inline ProfileCurves performance_profile(const RatioTable& ratios) {
  return performance_profile(ratios, default_tau_grid(ratios.r_failed));
}

// ---------------------------------------------------------------------------
// Emission.  CSV column order is fixed; JSON mirrors the same records.

enum class Format { Csv, Json };

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

inline void write_metrics(const MetricsTable& table, const fs::path& path,
                          Format format = Format::Csv) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (format == Format::Csv) {
    out << "problem,solver,status,N_i,N_f,T,hnorm,gnorm,mixed\n";
    for (const auto& r : table.rows)
      out << r.problem << ',' << r.solver << ',' << to_string(r.status) << ','
          << r.n_iter << ',' << r.n_res << ',' << detail::fmt(r.seconds) << ','
          << detail::fmt(r.hnorm) << ',' << detail::fmt(r.gnorm) << ','
          << r.mixed() << '\n';
  } else {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : table.rows)
      j.push_back({{"problem", r.problem},
                   {"solver", r.solver},
                   {"status", to_string(r.status)},
                   {"N_i", r.n_iter},
                   {"N_f", r.n_res},
                   {"T", r.seconds},
                   {"hnorm", r.hnorm},
                   {"gnorm", r.gnorm},
                   {"mixed", r.mixed()}});
    out << j.dump(2) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline void write_profile(const ProfileCurves& curves, const fs::path& path,
                          Format format = Format::Csv) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (format == Format::Csv) {
    out << "tau";
    for (const auto& s : curves.solvers) out << ",rho_" << s;
    out << '\n';
    for (size_t g = 0; g < curves.tau.size(); ++g) {
      out << detail::fmt(curves.tau[g]);
      for (Eigen::Index s = 0; s < curves.rho.cols(); ++s)
        out << ',' << detail::fmt(curves.rho(static_cast<Eigen::Index>(g), s));
      out << '\n';
    }
  } else {
    nlohmann::json j;
    j["measure"] = measure_label(curves.measure);
    j["r_failed"] = curves.r_failed;
    j["tau"] = curves.tau;
    for (Eigen::Index s = 0; s < curves.rho.cols(); ++s) {
      std::vector<double> col(curves.tau.size());
      for (size_t g = 0; g < curves.tau.size(); ++g)
        col[g] = curves.rho(static_cast<Eigen::Index>(g), s);
      j["rho"][curves.solvers[static_cast<size_t>(s)]] = col;
    }
    out << j.dump(2) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Minimal CSV readers for round-trip checks and downstream tooling.
inline MetricsTable read_metrics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": missing header");
  MetricsTable table;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected 9 columns, got " +
                               std::to_string(cells.size()));
    MetricsRow r;
    r.problem = cells[0];
    r.solver = cells[1];
    bool known = false;
    for (Status st : {Status::ConvergedResidual, Status::ConvergedGradient,
                      Status::MaxIterations, Status::LineSearchFailure,
                      Status::InnerLoopFailure, Status::NumericalBreakdown})
      if (cells[2] == to_string(st)) {
        r.status = st;
        known = true;
      }
    if (!known)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": unknown status '" + cells[2] + "'");
    r.n_iter = std::stol(cells[3]);
    r.n_res = std::stol(cells[4]);
    r.seconds = std::stod(cells[5]);
    r.hnorm = std::stod(cells[6]);
    r.gnorm = std::stod(cells[7]);
    if (std::stol(cells[8]) != r.mixed())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": mixed column does not equal N_f + 3 N_i");
    table.rows.push_back(std::move(r));
  }
  return table;
}

struct ParsedProfile {
  std::vector<double> tau;
  std::vector<std::string> solvers;
  Matrix rho;
};

inline ParsedProfile read_profile_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": missing header");
  ParsedProfile out;
  {
    std::stringstream ss(line);
    std::string cell;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      if (first) {
        if (cell != "tau")
          throw std::runtime_error(path.string() + ": first column must be tau");
        first = false;
      } else {
        const std::string prefix = "rho_";
        out.solvers.push_back(cell.rfind(prefix, 0) == 0
                                  ? cell.substr(prefix.size())
                                  : cell);
      }
    }
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != out.solvers.size() + 1)
      throw std::runtime_error(path.string() + ": ragged profile row");
    out.tau.push_back(vals[0]);
    rows.push_back(std::move(vals));
  }
  out.rho.resize(static_cast<Eigen::Index>(rows.size()),
                 static_cast<Eigen::Index>(out.solvers.size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < out.solvers.size(); ++j)
      out.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j + 1];
  return out;
}

}  // namespace holm
