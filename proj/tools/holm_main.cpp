// Command-line driver: solve single problems, run benchmark grids, sweep the
// regularisation exponent eta, and validate problem data.
//
// Exit codes: 0 success / converged, 1 usage or input error, 2 solver or
// check failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "holm/holm.hpp"

namespace {

using namespace holm;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& i : items) {
    if (!out.empty()) out += ',';
    out += i;
  }
  return out;
}

std::string fmt_short(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// A named problem is either a built-in or a path to a network manifest.
NlsProblem resolve_problem(const std::string& token) {
  if (token.size() > 5 && token.substr(token.size() - 5) == ".json") {
    LoadResult res = load_network(fs::path(token));
    for (const auto& d : res.diagnostics)
      std::cerr << (d.level == Diagnostic::Level::Error ? "error: " : "warning: ")
                << d.message << '\n';
    if (!res.ok())
      throw std::runtime_error("invalid network manifest " + token);
    return make_problem(std::make_shared<const BioNetwork>(std::move(*res.network)));
  }
  return builtin_problem(token);
}

NlsProblem resolve_source(const std::string& problem, const std::string& manifest) {
  if (problem.empty() == manifest.empty())
    throw std::runtime_error("give exactly one of --problem and --manifest");
  return manifest.empty() ? resolve_problem(problem)
                          : resolve_problem(manifest);
}

Vector resolve_x0(const std::string& mode, const NlsProblem& p) {
  if (mode == "zeros") return Vector::Zero(p.dim_x);
  if (mode == "suggested")
    return p.x0.size() ? p.x0 : Vector::Zero(p.dim_x);
  const Vector v = read_vector(mode);
  if (v.size() != p.dim_x)
    throw std::runtime_error("starting point in " + mode + " has " +
                             std::to_string(v.size()) + " entries, expected " +
                             std::to_string(p.dim_x));
  return v;
}

std::vector<NlsProblem> resolve_problems(const std::string& list) {
  std::vector<NlsProblem> out;
  for (const auto& token : split_list(list)) out.push_back(resolve_problem(token));
  if (out.empty()) throw std::runtime_error("empty problem set");
  return out;
}

std::vector<SolverSpec> resolve_solvers(const std::string& list, double eta,
                                        double eps, long max_iter) {
  std::vector<SolverSpec> out;
  for (const auto& token : split_list(list)) {
    SolverSpec spec = make_solver(token, eta);
    spec.cfg.eps = eps;
    spec.cfg.max_iter = max_iter;
    out.push_back(std::move(spec));
  }
  if (out.empty()) throw std::runtime_error("empty solver set");
  return out;
}

unsigned seed_from_env() {
  if (const char* s = std::getenv("HOLM_SEED")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(s, &end, 10);
    if (end != s && *end == '\0') return static_cast<unsigned>(v);
  }
  return 20260822u;
}

void write_trace_csv(const SolveReport& rep, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  out << "k,psi,hnorm,gnorm,mu,step,D,theta,trials,r_hat,pred\n";
  for (const auto& t : rep.trace)
    out << t.k << ',' << t.psi << ',' << t.hnorm << ',' << t.gnorm << ','
        << t.mu << ',' << t.step << ',' << t.D << ',' << t.theta << ','
        << t.trials << ',' << t.r_hat << ',' << t.pred << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_report_json(const NlsProblem& p, const SolverSpec& spec,
                       const SolveReport& rep, const fs::path& path) {
  std::vector<double> x(rep.x_final.data(), rep.x_final.data() + rep.x_final.size());
  nlohmann::json j{{"problem", p.name},
                   {"solver", spec.name},
                   {"status", to_string(rep.status)},
                   {"N_i", rep.n_iter},
                   {"N_f", rep.n_res},
                   {"N_j", rep.n_jac},
                   {"T", rep.seconds},
                   {"hnorm", rep.hnorm},
                   {"gnorm", rep.gnorm},
                   {"message", rep.message},
                   {"x", x}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

struct SolveArgs {
  std::string problem, manifest, solver = "lmls", x0 = "zeros", out, trace;
  double eta = 1.2, eps = 1e-6;
  long max_iter = 100000;
};

int cmd_solve(const SolveArgs& a) {
  const NlsProblem p = resolve_source(a.problem, a.manifest);
  SolverSpec spec = make_solver(a.solver, a.eta);
  spec.cfg.eps = a.eps;
  spec.cfg.max_iter = a.max_iter;
  const Vector x0 = resolve_x0(a.x0, p);
  const SolveReport rep = run_solver(spec, p, x0);
  std::cout << "problem:        " << p.name << '\n'
            << "solver:         " << spec.name << '\n'
            << "status:         " << to_string(rep.status) << '\n'
            << "iterations:     " << rep.n_iter << '\n'
            << "residual evals: " << rep.n_res << '\n'
            << "jacobian evals: " << rep.n_jac << '\n'
            << "final |h|:      " << rep.hnorm << '\n'
            << "final |grad|:   " << rep.gnorm << '\n'
            << "time [s]:       " << rep.seconds << '\n';
  if (!rep.message.empty()) std::cout << "note:           " << rep.message << '\n';
  if (!a.out.empty()) write_report_json(p, spec, rep, a.out);
  if (!a.trace.empty()) write_trace_csv(rep, a.trace);
  return rep.converged() ? 0 : 2;
}

struct BenchArgs {
  std::string problems, solvers, out_dir = ".", measure;
  double eta = 1.2, eps = 1e-6;
  long max_iter = 100000;
  int jobs = 1;
};

int cmd_bench(const BenchArgs& a) {
  const std::vector<NlsProblem> probs = resolve_problems(a.problems);
  const std::vector<SolverSpec> specs =
      resolve_solvers(a.solvers, a.eta, a.eps, a.max_iter);
  const MetricsTable table = run_benchmark(probs, specs, a.jobs);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  write_metrics(table, dir / "metrics.csv");
  std::cout << "wrote " << (dir / "metrics.csv").string() << '\n';
  std::vector<Measure> measures =
      a.measure.empty() ? all_measures()
                        : std::vector<Measure>{parse_measure(a.measure)};
  for (Measure m : measures) {
    const RatioTable ratios = performance_ratios(table, m);
    for (const auto& w : ratios.warnings) std::cerr << "warning: " << w << '\n';
    ProfileCurves curves = performance_profile(ratios);
    curves.measure = m;
    const fs::path path =
        dir / (std::string("profile_") + measure_label(m) + ".csv");
    write_profile(curves, path);
    std::cout << "wrote " << path.string() << '\n';
  }
  return 0;
}

struct TuneArgs {
  std::string problems, etas = "0.6,0.8,1.0,1.2,1.4", method = "both",
              out_dir = ".";
  double eps = 1e-6;
  long max_iter = 100000;
  int jobs = 1;
};

int cmd_tune_eta(const TuneArgs& a) {
  std::vector<double> etas;
  for (const auto& token : split_list(a.etas)) {
    size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(token, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != token.size())
      throw std::runtime_error("bad eta value '" + token + "'");
    if (!(v > 0))
      throw std::runtime_error("eta must be positive, got " + token);
    etas.push_back(v);
  }
  if (etas.empty()) throw std::runtime_error("empty eta list");
  const std::vector<NlsProblem> probs = resolve_problems(a.problems);
  const std::vector<std::string> methods =
      a.method == "both" ? std::vector<std::string>{"lmls", "lmtr"}
                         : std::vector<std::string>{a.method};
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  for (const auto& method : methods) {
    std::vector<SolverSpec> specs;
    for (double eta : etas) {
      SolverSpec spec = make_solver(method, eta);
      spec.cfg.eps = a.eps;
      spec.cfg.max_iter = a.max_iter;
      spec.name = method + "(eta=" + fmt_short(eta) + ")";
      specs.push_back(std::move(spec));
    }
    const MetricsTable table = run_benchmark(probs, specs, a.jobs);
    write_metrics(table, dir / ("tune_" + method + "_metrics.csv"));
    std::cout << "wrote " << (dir / ("tune_" + method + "_metrics.csv")).string()
              << '\n';
    for (Measure m : all_measures()) {
      const RatioTable ratios = performance_ratios(table, m);
      for (const auto& w : ratios.warnings)
        std::cerr << "warning: " << w << '\n';
      ProfileCurves curves = performance_profile(ratios);
      curves.measure = m;
      const fs::path path =
          dir / ("tune_" + method + "_profile_" + measure_label(m) + ".csv");
      write_profile(curves, path);
      std::cout << "wrote " << path.string() << '\n';
    }
  }
  return 0;
}

struct CheckArgs {
  std::string problem, manifest;
  int points = 10;
  double step = 0;  // 0: automatic
};

int cmd_check(const CheckArgs& a) {
  NlsProblem p;
  if (!a.manifest.empty() == !a.problem.empty())
    throw std::runtime_error("give exactly one of --problem and --manifest");
  if (!a.manifest.empty()) {
    const LoadResult res = load_network(fs::path(a.manifest));
    for (const auto& d : res.diagnostics)
      std::cout << (d.level == Diagnostic::Level::Error ? "error: " : "warning: ")
                << d.message << '\n';
    if (!res.ok()) {
      std::cout << "check FAILED: network validation\n";
      return 2;
    }
    const BioNetwork& net = *res.network;
    std::cout << "network validation: pass (species=" << net.species()
              << ", reactions=" << net.reactions() << ", rank=" << net.rank
              << ", moieties=" << net.L.rows() << ")\n";
    p = make_problem(std::make_shared<const BioNetwork>(net));
  } else {
    p = builtin_problem(a.problem);
  }
  std::mt19937_64 gen(seed_from_env());
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double max_rel = 0;
  for (int i = 0; i < a.points; ++i) {
    Vector x(p.dim_x);
    for (int j = 0; j < p.dim_x; ++j) x(j) = u(gen);
    const Matrix Ja = p.jacobian(x);
    const Matrix Jf = fd_jacobian(p, x, a.step);
    max_rel = std::max(max_rel, (Jf - Ja).norm() / std::max(1.0, Ja.norm()));
  }
  std::cout << "jacobian check: max relative error " << max_rel << " over "
            << a.points << " points\n";
  if (!(max_rel <= 1e-5)) {
    std::cout << "check FAILED: analytic vs finite-difference jacobian\n";
    return 2;
  }
  std::cout << "check passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Levenberg-Marquardt solvers for nonlinear least squares"};
  app.require_subcommand(1);

  SolveArgs sa;
  CLI::App* solve = app.add_subcommand("solve", "solve a single problem");
  solve->add_option("--problem", sa.problem, "built-in problem name");
  solve->add_option("--manifest", sa.manifest, "network manifest path");
  solve->add_option("--solver", sa.solver,
                    "one of: " + join(solver_names()))
      ->capture_default_str();
  solve->add_option("--eta", sa.eta, "regularisation exponent")
      ->capture_default_str();
  solve->add_option("--eps", sa.eps, "stopping tolerance")->capture_default_str();
  solve->add_option("--max-iter", sa.max_iter, "iteration cap")
      ->capture_default_str();
  solve->add_option("--x0", sa.x0, "starting point: zeros | suggested | file")
      ->capture_default_str();
  solve->add_option("--out", sa.out, "write the report as JSON");
  solve->add_option("--trace", sa.trace, "write the per-iteration trace as CSV");

  BenchArgs ba;
  ba.problems = join(builtin_names());
  ba.solvers = join(solver_names());
  CLI::App* bench = app.add_subcommand("bench", "run a problem x solver grid");
  bench->add_option("--problems", ba.problems,
                    "comma-separated problems (built-ins or manifests)")
      ->capture_default_str();
  bench->add_option("--solvers", ba.solvers, "comma-separated solvers")
      ->capture_default_str();
  bench->add_option("--eta", ba.eta, "regularisation exponent")
      ->capture_default_str();
  bench->add_option("--eps", ba.eps, "stopping tolerance")->capture_default_str();
  bench->add_option("--max-iter", ba.max_iter, "iteration cap")
      ->capture_default_str();
  bench->add_option("--out-dir", ba.out_dir, "output directory")
      ->capture_default_str();
  bench->add_option("--measure", ba.measure,
                    "emit one profile only: N_i | N_f | mixed | T");
  bench->add_option("--jobs", ba.jobs, "parallel grid cells")
      ->capture_default_str();

  TuneArgs ta;
  ta.problems = join(builtin_names());
  CLI::App* tune = app.add_subcommand("tune-eta",
                                      "profile a sweep of the exponent eta");
  tune->add_option("--etas", ta.etas, "comma-separated eta values")
      ->capture_default_str();
  tune->add_option("--problems", ta.problems,
                   "comma-separated problems (built-ins or manifests)")
      ->capture_default_str();
  tune->add_option("--method", ta.method, "lmls | lmtr | both")
      ->check(CLI::IsMember({"lmls", "lmtr", "both"}))
      ->capture_default_str();
  tune->add_option("--eps", ta.eps, "stopping tolerance")->capture_default_str();
  tune->add_option("--max-iter", ta.max_iter, "iteration cap")
      ->capture_default_str();
  tune->add_option("--out-dir", ta.out_dir, "output directory")
      ->capture_default_str();
  tune->add_option("--jobs", ta.jobs, "parallel grid cells")
      ->capture_default_str();

  CheckArgs ca;
  CLI::App* check = app.add_subcommand("check",
                                       "validate a problem's data and Jacobian");
  check->add_option("--problem", ca.problem, "built-in problem name");
  check->add_option("--manifest", ca.manifest, "network manifest path");
  check->add_option("--points", ca.points, "number of random test points")
      ->capture_default_str();
  check->add_option("--step", ca.step,
                    "finite-difference step (0 chooses automatically)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(solve)) return cmd_solve(sa);
    if (app.got_subcommand(bench)) return cmd_bench(ba);
    if (app.got_subcommand(tune)) return cmd_tune_eta(ta);
    if (app.got_subcommand(check)) return cmd_check(ca);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
