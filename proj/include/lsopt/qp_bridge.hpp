#pragma once

#include "lsopt/admm_engine.hpp"
#include "lsopt/dykstra.hpp"

#include <optional>
#include <utility>

namespace lsopt {

// min 1/2 x'Qx - x'R subject to A x = B, C x <= D, lower <= x <= upper.
// Q may instead be given by its diagonal (Q_diag), which keeps very large
// separable problems out of dense storage.
struct QpProblem {
  Matrix Q;
  Vector Q_diag;
  Vector R;
  std::optional<Matrix> A;
  std::optional<Vector> B;
  std::optional<Matrix> C;
  std::optional<Vector> D;
  std::optional<Vector> lower;
  std::optional<Vector> upper;

  Eigen::Index size() const { return R.size(); }
  bool diagonal() const { return Q.size() == 0 && Q_diag.size() > 0; }
  Matrix dense_Q() const;
  double objective(const Vector& x) const;
};

struct QpConfig {
  AdmmConfig admm = [] {
    AdmmConfig c;
    c.eps = 1e-10;
    c.eps_dual = 1e-10;
    c.max_iter = 200000;
    return c;
  }();
  DykstraConfig inner = [] {
    DykstraConfig c;
    c.tol = 1e-13;
    c.max_cycles = 100000;
    return c;
  }();
  // Non-positive selects trace(Q)/n.
  double phi0 = 0.0;
  // ADMM start for both x and y; zeros when empty.
  std::optional<Vector> start;
};

struct QpSolution {
  Vector x;
  // Multiplier of the split constraint x = y (phi * u).
  Vector split_multiplier;
  SolverReport report;
};

QpSolution qp_solve(const QpProblem& p, const QpConfig& cfg = {});

// (Qbar, Rbar) of the dual min 1/2 l'Qbar l - l'Rbar over l >= 0.
std::pair<Matrix, Vector> qp_dual(const Matrix& Q, const Vector& R, const Matrix& S, const Vector& T);

struct QpDualSolution {
  Vector lambda;
  Vector x;
  double primal_value = 0.0;
  double dual_value = 0.0;
  SolverReport report;
};

// Solves the dual by box-constrained CCD and recovers x = Q^{-1}(R - S'lambda).
QpDualSolution qp_dual_solve(const Matrix& Q, const Vector& R, const Matrix& S, const Vector& T,
                             double tol = 1e-12, int max_cycles = 1000000);

// Stacked rows [-A; A; C; -I; I] x <= [-B; B; D; -lower; upper]. Bound rows
// appear only for the bound vectors that are present.
std::pair<Matrix, Vector> canonicalize(const QpProblem& p);

}  // namespace lsopt
