#include "lsopt/qp_bridge.hpp"

#include "lsopt/cd_engine.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace lsopt {

Matrix QpProblem::dense_Q() const {
  if (diagonal()) return Q_diag.asDiagonal();
  return Q;
}

double QpProblem::objective(const Vector& x) const {
  const double quad = diagonal() ? x.dot(Q_diag.cwiseProduct(x)) : x.dot(Q * x);
  return 0.5 * quad - x.dot(R);
}

namespace {

void validate(const QpProblem& p) {
  const auto n = p.size();
  if (n == 0) fail(ErrorCode::BadDims, "empty problem");
  require_finite(p.R, "R");
  if (p.diagonal()) {
    require_size(p.Q_diag, n, "Q diagonal");
    require_finite(p.Q_diag, "Q diagonal");
  } else {
    if (p.Q.rows() != n || p.Q.cols() != n) fail(ErrorCode::DimensionMismatch, "Q must be n x n");
    require_finite(p.Q, "Q");
    if (!is_symmetric(p.Q, 1e-10 * (1.0 + p.Q.cwiseAbs().maxCoeff()))) {
      fail(ErrorCode::InvalidArgument, "Q must be symmetric");
    }
  }
  if (p.A.has_value() != p.B.has_value()) fail(ErrorCode::InvalidArgument, "A and B go together");
  if (p.A && (p.A->cols() != n || p.A->rows() != p.B->size())) fail(ErrorCode::DimensionMismatch, "A/B shape");
  if (p.C.has_value() != p.D.has_value()) fail(ErrorCode::InvalidArgument, "C and D go together");
  if (p.C && (p.C->cols() != n || p.C->rows() != p.D->size())) fail(ErrorCode::DimensionMismatch, "C/D shape");
  if (p.lower) require_size(*p.lower, n, "lower");
  if (p.upper) require_size(*p.upper, n, "upper");
  if (p.lower && p.upper && (p.lower->array() > p.upper->array()).any()) {
    fail(ErrorCode::InvertedBounds, "lower > upper");
  }
}

// Solves min 1/2 x'(Q + phi I)x - x'q subject to A x = B, refactoring only
// when phi changes.
class EqualityQpSolver {
 public:
  explicit EqualityQpSolver(const QpProblem& p) : p_(p) {}

  Vector solve(const Vector& q, double phi) {
    if (phi != phi_) refactor(phi);
    Vector x = minv(q);
    if (p_.A) x -= minv_at_ * (s_pinv_ * (*p_.A * x - *p_.B));
    return x;
  }

 private:
  Vector minv(const Vector& q) const {
    if (p_.diagonal()) return q.cwiseQuotient(diag_);
    return factor_.solve(q);
  }

  void refactor(double phi) {
    const auto n = p_.size();
    if (p_.diagonal()) {
      diag_ = p_.Q_diag.array() + phi;
      if ((diag_.array() <= 0.0).any()) fail(ErrorCode::NotPositiveDefinite, "Q + phi I is not positive definite");
    } else {
      factor_ = SpdFactor(p_.Q + phi * Matrix::Identity(n, n));
    }
    if (p_.A) {
      const Matrix at = p_.A->transpose();
      minv_at_ = p_.diagonal() ? Matrix(diag_.cwiseInverse().asDiagonal() * at) : factor_.solve_many(at);
      s_pinv_ = pseudo_inverse(*p_.A * minv_at_);
    }
    phi_ = phi;
  }

  const QpProblem& p_;
  double phi_ = -1.0;
  SpdFactor factor_;
  Vector diag_;
  Matrix minv_at_;
  Matrix s_pinv_;
};

bool has_set_constraints(const QpProblem& p) { return p.C || p.lower || p.upper; }

}  // namespace

QpSolution qp_solve(const QpProblem& p, const QpConfig& cfg) {
  validate(p);
  const auto n = p.size();
  const double trace = p.diagonal() ? p.Q_diag.sum() : p.Q.trace();
  const double scale = std::abs(trace) / static_cast<double>(n);

  AdmmConfig acfg = cfg.admm;
  acfg.phi_min = std::max(acfg.phi_min, 1e-10 * std::max(scale, 1.0));
  acfg.phi_max = std::min(acfg.phi_max, 1e10 * std::max(scale, 1.0));
  double phi0 = cfg.phi0 > 0.0 ? cfg.phi0 : (trace > 0.0 ? scale : 1.0);
  acfg.phi0 = std::max(phi0, acfg.phi_min);

  auto xs = std::make_shared<EqualityQpSolver>(p);
  AdmmProblem prob;
  prob.x_update = [xs, &p](const Vector& y, const Vector& u, double phi) {
    return xs->solve(p.R + phi * (y - u), phi);
  };

  if (has_set_constraints(p)) {
    const bool box_only = !p.C;
    auto set = std::make_shared<LinearSet>();
    set->C = p.C;
    set->D = p.D;
    set->lower = p.lower;
    set->upper = p.upper;
    const DykstraConfig inner = cfg.inner;
    const Vector lo = p.lower ? *p.lower : Vector::Constant(n, -std::numeric_limits<double>::infinity());
    const Vector hi = p.upper ? *p.upper : Vector::Constant(n, std::numeric_limits<double>::infinity());
    ProxFn proj("qp_feasible_set", [set, inner, box_only, lo, hi](const Vector& v) {
      if (box_only) return Vector(v.cwiseMax(lo).cwiseMin(hi));
      return project_general_linear(*set, v, inner).x;
    });
    prob.y_prox = [proj](double) { return proj; };
  } else {
    prob.y_prox = [](double) { return prox::zero(); };
  }

  QpSolution out;
  AdmmResult res;
  Vector start = Vector::Zero(n);
  if (cfg.start) {
    require_size(*cfg.start, n, "start");
    start = *cfg.start;
  }
  try {
    if (!has_set_constraints(p)) {
      // Nothing to split: the x-step with phi -> 0 is the exact solve when Q is definite.
      try {
        out.x = xs->solve(p.R, 0.0);
        out.split_multiplier = Vector::Zero(n);
        out.report.iterations = 1;
        out.report.status = SolverStatus::Converged;
        return out;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotPositiveDefinite) throw;
      }
    }
    res = admm_solve(prob, start, start, acfg);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptySetSuspected) fail(ErrorCode::InfeasibleSuspected, e.what());
    throw;
  }
  // On an empty set the split residual x - y stalls at the gap instead of vanishing.
  if (!res.report.converged() && res.report.primal_residual > 1e-6 * (1.0 + res.x.cwiseAbs().maxCoeff())) {
    fail(ErrorCode::InfeasibleSuspected, "ADMM split residual does not vanish; constraints are probably inconsistent");
  }
  out.x = has_set_constraints(p) ? res.y : res.x;
  out.split_multiplier = res.phi * res.u;
  out.report = std::move(res.report);
  return out;
}

std::pair<Matrix, Vector> qp_dual(const Matrix& Q, const Vector& R, const Matrix& S, const Vector& T) {
  require_square(Q, "Q");
  require_size(R, Q.rows(), "R");
  if (S.cols() != Q.rows() || S.rows() != T.size()) fail(ErrorCode::DimensionMismatch, "S/T shape");
  SpdFactor f(Q);
  const Matrix qinv_st = f.solve_many(S.transpose());
  Matrix qbar = S * qinv_st;
  qbar = 0.5 * (qbar + qbar.transpose());
  Vector rbar = S * f.solve(R) - T;
  return {qbar, rbar};
}

QpDualSolution qp_dual_solve(const Matrix& Q, const Vector& R, const Matrix& S, const Vector& T, double tol,
                             int max_cycles) {
  auto [qbar, rbar] = qp_dual(Q, R, S, T);
  const auto m = qbar.rows();
  CdConfig cfg;
  cfg.tol = tol;
  cfg.max_cycles = max_cycles;
  const Vector lo = Vector::Zero(m);
  const Vector hi = Vector::Constant(m, std::numeric_limits<double>::infinity());
  Solution dual = ccd_qp_box(qbar, rbar, lo, hi, Vector::Zero(m), cfg);
  QpDualSolution out;
  out.lambda = dual.x;
  out.report = dual.report;
  SpdFactor f(Q);
  out.x = f.solve(Vector(R - S.transpose() * out.lambda));
  out.primal_value = 0.5 * out.x.dot(Q * out.x) - out.x.dot(R);
  out.dual_value = -(0.5 * out.lambda.dot(qbar * out.lambda) - out.lambda.dot(rbar)) - 0.5 * R.dot(f.solve(R));
  return out;
}

std::pair<Matrix, Vector> canonicalize(const QpProblem& p) {
  const auto n = p.size();
  Eigen::Index rows = 0;
  if (p.A) rows += 2 * p.A->rows();
  if (p.C) rows += p.C->rows();
  if (p.lower) rows += n;
  if (p.upper) rows += n;
  Matrix S = Matrix::Zero(rows, n);
  Vector T = Vector::Zero(rows);
  Eigen::Index r = 0;
  if (p.A) {
    const auto m = p.A->rows();
    S.middleRows(r, m) = -*p.A;
    T.segment(r, m) = -*p.B;
    r += m;
    S.middleRows(r, m) = *p.A;
    T.segment(r, m) = *p.B;
    r += m;
  }
  if (p.C) {
    const auto m = p.C->rows();
    S.middleRows(r, m) = *p.C;
    T.segment(r, m) = *p.D;
    r += m;
  }
  if (p.lower) {
    S.middleRows(r, n) = -Matrix::Identity(n, n);
    T.segment(r, n) = -*p.lower;
    r += n;
  }
  if (p.upper) {
    S.middleRows(r, n) = Matrix::Identity(n, n);
    T.segment(r, n) = *p.upper;
  }
  return {S, T};
}

}  // namespace lsopt
