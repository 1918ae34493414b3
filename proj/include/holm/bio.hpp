#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "holm/types.hpp"

namespace holm {

using IntMatrix = Eigen::MatrixXi;

struct Diagnostic {
  enum class Level { Warning, Error };
  Level level = Level::Error;
  std::string message;
};
using Diagnostics = std::vector<Diagnostic>;

inline bool has_errors(const Diagnostics& ds) {
  for (const auto& d : ds)
    if (d.level == Diagnostic::Level::Error) return true;
  return false;
}

inline std::string format_diagnostics(const Diagnostics& ds) {
  std::string out;
  for (const auto& d : ds) {
    out += d.level == Diagnostic::Level::Error ? "error: " : "warning: ";
    out += d.message;
    out += '\n';
  }
  return out;
}

namespace detail {

// Reduced row echelon form with partial pivoting.  Pivot columns are scanned
// left to right, so the returned pivot set is the greedy earliest maximal
// independent column set.  `tol` is an absolute pivot threshold.
inline std::vector<int> rref_inplace(Matrix& A, double tol) {
  std::vector<int> pivots;
  int lead = 0;
  for (int col = 0; col < A.cols() && lead < A.rows(); ++col) {
    int piv = -1;
    double best = tol;
    for (int r = lead; r < A.rows(); ++r) {
      const double a = std::abs(A(r, col));
      if (a > best) {
        best = a;
        piv = r;
      }
    }
    if (piv < 0) continue;
    A.row(piv).swap(A.row(lead));
    A.row(lead) /= A(lead, col);
    for (int r = 0; r < A.rows(); ++r) {
      if (r == lead) continue;
      const double f = A(r, col);
      if (f != 0.0) A.row(r) -= f * A.row(lead);
    }
    pivots.push_back(col);
    ++lead;
  }
  return pivots;
}

inline double pivot_tol(const IntMatrix& N) {
  const double mx = N.size() ? N.cwiseAbs().maxCoeff() : 0;
  return 1e-10 * mx;
}

}  // namespace detail

struct RowBasis {
  int rank = 0;
  std::vector<int> rows;  // indices into N, in increasing order
  IntMatrix nbar;         // the selected rows of N
};

// Earliest maximal set of linearly independent rows of N.  Row i of N is a
// column of N^T, so the pivot columns of rref(N^T) are exactly the greedy row
// basis.
inline RowBasis reduce_rows(const IntMatrix& N) {
  Matrix At = N.cast<double>().transpose();
  RowBasis rb;
  rb.rows = detail::rref_inplace(At, detail::pivot_tol(N));
  rb.rank = static_cast<int>(rb.rows.size());
  rb.nbar.resize(rb.rank, N.cols());
  for (int i = 0; i < rb.rank; ++i) rb.nbar.row(i) = N.row(rb.rows[i]);
  return rb;
}

// Basis of the left nullspace {y : y^T N = 0} in free-variable form: one row
// per non-pivot column of rref(N^T), with a 1 in the free position.  For
// integer N of desk scale the arithmetic is exact, so e.g. N=[-1;1] yields
// L=[1,1] rather than a unit-norm scaling of it.
inline Matrix left_nullspace(const IntMatrix& N) {
  const int m = static_cast<int>(N.rows());
  Matrix At = N.cast<double>().transpose();
  const std::vector<int> pivots = detail::rref_inplace(At, detail::pivot_tol(N));
  const int r = static_cast<int>(pivots.size());
  Matrix L = Matrix::Zero(m - r, m);
  int row = 0;
  std::vector<bool> is_pivot(m, false);
  for (int p : pivots) is_pivot[p] = true;
  for (int col = 0; col < m; ++col) {
    if (is_pivot[col]) continue;
    L(row, col) = 1.0;
    for (int i = 0; i < r; ++i) L(row, pivots[i]) = -At(i, col);
    ++row;
  }
  return L;
}

// Search for a strictly positive vector in the row space of L (equivalently a
// positive l with N^T l = 0).  Projects the all-ones vector onto the subspace;
// if that is not positive, alternates projections between the subspace and the
// positive cone.  Returns an empty vector when nothing positive is found.
inline Vector conservation_certificate(const Matrix& L, int max_rounds = 2000) {
  if (L.rows() == 0) return Vector();
  Eigen::LLT<Matrix> llt(L * L.transpose());
  if (llt.info() != Eigen::Success) return Vector();
  const auto project = [&](const Vector& z) -> Vector {
    return L.transpose() * llt.solve(L * z);
  };
  Vector z = Vector::Ones(L.cols());
  for (int round = 0; round < max_rounds; ++round) {
    const Vector y = project(z);
    const double ymax = y.cwiseAbs().maxCoeff();
    if (!(ymax > 0)) break;
    if (y.minCoeff() > 1e-9 * ymax) return y / ymax;
    z = y.cwiseMax(1e-3 * ymax);
  }
  return Vector();
}

// A reversible-kinetics reaction network at steady state.  F and R hold the
// forward/reverse stoichiometric coefficients (species x reactions); k stacks
// the log rate constants (ln k_f then ln k_r); l0 fixes the moiety totals.
struct BioNetwork {
  std::string name;
  IntMatrix F, R;
  Vector k;   // 2n
  Vector l0;  // m - r

  // derived
  IntMatrix N;                  // R - F
  int rank = 0;                 // r
  std::vector<int> basis_rows;  // rows of N forming Nbar
  Matrix nbar;                  // r x n
  Matrix L;                     // (m-r) x m, L*N = 0
  Vector certificate;           // positive l with N^T l = 0, empty if not found

  int species() const { return static_cast<int>(F.rows()); }
  int reactions() const { return static_cast<int>(F.cols()); }
};

// Fill in the derived fields (N, rank, Nbar, L, certificate) from F and R.
inline void derive_network(BioNetwork& net) {
  net.N = net.R - net.F;
  RowBasis rb = reduce_rows(net.N);
  net.rank = rb.rank;
  net.basis_rows = std::move(rb.rows);
  net.nbar = rb.nbar.cast<double>();
  net.L = left_nullspace(net.N);
  net.certificate = conservation_certificate(net.L);
}

// Structural validation.  Entry references in messages are 1-based to match
// the MatrixMarket convention.
inline void validate_network(const BioNetwork& net, Diagnostics& diags) {
  const auto err = [&](std::string m) {
    diags.push_back({Diagnostic::Level::Error, std::move(m)});
  };
  const auto warn = [&](std::string m) {
    diags.push_back({Diagnostic::Level::Warning, std::move(m)});
  };

  if (net.F.rows() != net.R.rows() || net.F.cols() != net.R.cols()) {
    err("dimensions: F is " + std::to_string(net.F.rows()) + "x" +
        std::to_string(net.F.cols()) + " but R is " +
        std::to_string(net.R.rows()) + "x" + std::to_string(net.R.cols()));
    return;  // nothing below is meaningful
  }
  const int m = net.species(), n = net.reactions();
  if (m < 1 || n < 1) {
    err("dimensions: need at least one species and one reaction, got " +
        std::to_string(m) + "x" + std::to_string(n));
    return;
  }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) {
      if (net.F(i, j) < 0)
        err("F nonnegative: F(" + std::to_string(i + 1) + "," +
            std::to_string(j + 1) + ") = " + std::to_string(net.F(i, j)));
      if (net.R(i, j) < 0)
        err("R nonnegative: R(" + std::to_string(i + 1) + "," +
            std::to_string(j + 1) + ") = " + std::to_string(net.R(i, j)));
    }
  for (int i = 0; i < m; ++i)
    if (net.F.row(i).isZero() && net.R.row(i).isZero())
      err("row cardinality: species " + std::to_string(i + 1) +
          " appears in no reaction (row " + std::to_string(i + 1) +
          " of [F, R] is zero)");
  const IntMatrix N = net.R - net.F;
  for (int j = 0; j < n; ++j) {
    int nnz = 0;
    for (int i = 0; i < m; ++i) nnz += N(i, j) != 0;
    if (nnz < 2)
      err("column cardinality: column " + std::to_string(j + 1) +
          " of N = R - F has " + std::to_string(nnz) +
          " nonzero entries, need at least two");
  }
  if (net.k.size() != 2 * n)
    err("dimensions: k has " + std::to_string(net.k.size()) +
        " entries, expected 2n = " + std::to_string(2 * n));
  if (net.l0.size() != m - net.rank)
    err("dimensions: l0 has " + std::to_string(net.l0.size()) +
        " entries, expected m - r = " + std::to_string(m - net.rank));
  for (Eigen::Index i = 0; i < net.l0.size(); ++i)
    if (!(net.l0[i] > 0))
      err("l0 positive: l0(" + std::to_string(i + 1) + ") = " +
          std::to_string(net.l0[i]));

  Matrix FR(m, 2 * n);
  FR << net.F.cast<double>(), net.R.cast<double>();
  Eigen::ColPivHouseholderQR<Matrix> qr(FR);
  qr.setThreshold(1e-10);
  if (qr.rank() < m)
    warn("kinetic consistency: rank([F, R]) = " + std::to_string(qr.rank()) +
         " < m = " + std::to_string(m));

  if (net.rank == m)
    warn("no moiety constraints: rank(N) = m, left nullspace is trivial");
  else if (net.certificate.size() == 0)
    err("mass conservation: no positive l with N^T l = 0 was found");
}

// Build a fully derived, validated network.  Throws on validation errors;
// loaders that want the diagnostic list call derive/validate directly.
inline BioNetwork make_bio_network(std::string name, IntMatrix F, IntMatrix R,
                                   Vector k, Vector l0) {
  BioNetwork net;
  net.name = std::move(name);
  net.F = std::move(F);
  net.R = std::move(R);
  net.k = std::move(k);
  net.l0 = std::move(l0);
  derive_network(net);
  Diagnostics diags;
  validate_network(net, diags);
  if (has_errors(diags))
    throw std::invalid_argument("invalid network '" + net.name + "':\n" +
                                format_diagnostics(diags));
  return net;
}

namespace detail {

// exp with the documented overflow guard: arguments beyond 700 abort the
// evaluation instead of silently saturating.
inline Vector guarded_exp(const Vector& arg, const Vector& x, const char* what) {
  for (Eigen::Index i = 0; i < arg.size(); ++i)
    if (arg[i] > 700.0)
      throw numerical_breakdown(std::string("exp overflow in ") + what +
                                    " component " + std::to_string(i + 1) +
                                    " (argument " + std::to_string(arg[i]) + ")",
                                x);
  return arg.array().exp();
}

}  // namespace detail

// Steady-state residual: net flux through each independent row of N, plus the
// moiety conservation defect.
//
//   h(x) = [ Nbar (v_f - v_r) ; L exp(x) - l0 ],   v = exp(k + [F,R]^T x)
inline Vector bio_residual(const BioNetwork& net, const Vector& x) {
  const int n = net.reactions();
  Vector arg(2 * n);
  arg.head(n) = net.k.head(n) + net.F.cast<double>().transpose() * x;
  arg.tail(n) = net.k.tail(n) + net.R.cast<double>().transpose() * x;
  const Vector v = detail::guarded_exp(arg, x, "flux");
  const Vector c = detail::guarded_exp(x, x, "concentration");
  Vector h(net.species());
  h.head(net.rank) = net.nbar * (v.head(n) - v.tail(n));
  h.tail(net.L.rows()) = net.L * c - net.l0;
  return h;
}

// Analytic Jacobian of bio_residual:
//   top    = Nbar (Diag(v_f) F^T - Diag(v_r) R^T)
//   bottom = L Diag(exp(x))
inline Matrix bio_jacobian(const BioNetwork& net, const Vector& x) {
  const int n = net.reactions();
  const int m = net.species();
  Vector arg(2 * n);
  const Matrix Ft = net.F.cast<double>().transpose();
  const Matrix Rt = net.R.cast<double>().transpose();
  arg.head(n) = net.k.head(n) + Ft * x;
  arg.tail(n) = net.k.tail(n) + Rt * x;
  const Vector v = detail::guarded_exp(arg, x, "flux");
  const Vector c = detail::guarded_exp(x, x, "concentration");
  Matrix J(m, m);
  J.topRows(net.rank) =
      net.nbar * (v.head(n).asDiagonal() * Ft - v.tail(n).asDiagonal() * Rt);
  J.bottomRows(net.L.rows()) = net.L * c.asDiagonal();
  return J;
}

// Wrap a network as an NlsProblem.  The network is shared immutably so the
// problem is cheap to copy and safe to evaluate concurrently.
inline NlsProblem make_problem(std::shared_ptr<const BioNetwork> net,
                               Vector x0 = Vector()) {
  NlsProblem p;
  p.name = net->name;
  p.dim_x = net->species();
  p.dim_h = net->species();
  p.x0 = x0.size() ? std::move(x0) : Vector::Zero(p.dim_x);
  p.residual = [net](const Vector& x) { return bio_residual(*net, x); };
  p.jacobian = [net](const Vector& x) { return bio_jacobian(*net, x); };
  return p;
}

}  // namespace holm
