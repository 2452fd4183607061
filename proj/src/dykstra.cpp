#include "lsopt/dykstra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lsopt {

namespace {

void check_cfg(const DykstraConfig& cfg) {
  if (!(cfg.tol > 0.0)) fail(ErrorCode::InvalidArgument, "Dykstra tolerance must be > 0");
  if (cfg.max_cycles < 1) fail(ErrorCode::InvalidArgument, "max_cycles must be >= 1");
}

double inf_dist(const Vector& a, const Vector& b) {
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

void check_blowup(double residual, double scale) {
  if (!std::isfinite(residual) || residual > 1e6 * scale) {
    fail(ErrorCode::EmptySetSuspected, "Dykstra residuals diverge; intersection is probably empty");
  }
}

// The cycle that confirms the fixed point is not counted.
void finish(SolverReport& rep, int executed, bool converged, double change) {
  rep.iterations = std::max(1, converged ? executed - 1 : executed);
  rep.primal_residual = change;
  rep.status = converged ? SolverStatus::Converged : SolverStatus::MaxIter;
}

// Iterates can sit still for a few cycles while a residual drifts through a
// clamped direction; a fixed point also needs the sub-steps to agree.
bool settled(double change, double spread, double tol, double scale) {
  return change <= tol && spread <= 10.0 * tol * scale;
}

}  // namespace

Solution dykstra_two(const ProxFn& f1, const ProxFn& f2, const Vector& v, const DykstraConfig& cfg) {
  check_cfg(cfg);
  require_finite(v, "v");
  const auto n = v.size();
  Vector x = v, y = v;
  Vector p = Vector::Zero(n), q = Vector::Zero(n);
  const double scale = 1.0 + v.cwiseAbs().maxCoeff();
  Solution out;
  int k = 0;
  bool done = false;
  double change = 0.0;
  while (k < cfg.max_cycles && !done) {
    ++k;
    Vector xn = f1(y + p);
    require_size(xn, n, "prox output");
    p = y + p - xn;
    Vector yn = f2(xn + q);
    require_size(yn, n, "prox output");
    q = xn + q - yn;
    change = std::max(inf_dist(xn, x), inf_dist(yn, y));
    x = std::move(xn);
    y = std::move(yn);
    out.report.primal_trace.push_back(change);
    check_blowup(std::max(p.cwiseAbs().maxCoeff(), q.cwiseAbs().maxCoeff()), scale);
    done = settled(change, inf_dist(x, y), cfg.tol, scale);
  }
  finish(out.report, k, done, change);
  out.x = std::move(y);
  return out;
}

Solution dykstra_cycle(const std::vector<ProxFn>& fns, const Vector& v, const DykstraConfig& cfg) {
  check_cfg(cfg);
  require_finite(v, "v");
  if (fns.empty()) fail(ErrorCode::InvalidArgument, "need at least one function");
  Solution out;
  if (fns.size() == 1) {
    out.x = fns[0](v);
    out.report.iterations = 1;
    out.report.primal_trace.push_back(0.0);
    out.report.status = SolverStatus::Converged;
    return out;
  }
  const auto n = v.size();
  const std::size_t m = fns.size();
  std::vector<Vector> z(m, Vector::Zero(n));
  std::vector<Vector> prev(m, Vector::Constant(n, std::numeric_limits<double>::infinity()));
  const double scale = 1.0 + v.cwiseAbs().maxCoeff();
  Vector x = v;
  int k = 0;
  bool done = false;
  double change = 0.0;
  while (k < cfg.max_cycles && !done) {
    ++k;
    change = 0.0;
    double zmax = 0.0;
    double spread = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      Vector w = x + z[j];
      Vector xn = fns[j](w);
      require_size(xn, n, "prox output");
      spread = std::max(spread, inf_dist(xn, x));
      x = std::move(xn);
      z[j] = w - x;
      change = std::max(change, k == 1 ? inf_dist(x, v) : inf_dist(x, prev[j]));
      prev[j] = x;
      zmax = std::max(zmax, z[j].cwiseAbs().maxCoeff());
    }
    out.report.primal_trace.push_back(change);
    check_blowup(zmax, scale);
    done = k > 1 && settled(change, spread, cfg.tol, scale);
  }
  finish(out.report, k, done, change);
  out.x = std::move(x);
  return out;
}

Solution project_polyhedron(const Matrix& C, const Vector& D, const Vector& v, const DykstraConfig& cfg) {
  check_cfg(cfg);
  require_finite(v, "v");
  if (C.rows() != D.size()) fail(ErrorCode::DimensionMismatch, "C rows must match D");
  if (C.cols() != v.size()) fail(ErrorCode::DimensionMismatch, "C columns must match v");
  const auto m = C.rows();
  Solution out;
  if (m == 0) {
    out.x = v;
    out.report.iterations = 1;
    out.report.status = SolverStatus::Converged;
    return out;
  }
  Vector norm2(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    norm2(j) = C.row(j).squaredNorm();
    if (norm2(j) == 0.0) fail(ErrorCode::DegenerateSet, "zero row in C");
  }
  // Half-space residuals are multiples of their normals; store the multiplier.
  Vector z = Vector::Zero(m);
  std::vector<Vector> prev(static_cast<std::size_t>(m));
  const double scale = 1.0 + v.cwiseAbs().maxCoeff();
  Vector x = v;
  int k = 0;
  bool done = false;
  double change = 0.0;
  while (k < cfg.max_cycles && !done) {
    ++k;
    change = 0.0;
    double spread = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto row = C.row(j);
      const double excess = row.dot(x) + z(j) * norm2(j) - D(j);
      const double zn = positive_part(excess) / norm2(j);
      x += (z(j) - zn) * row.transpose();
      spread = std::max(spread, std::abs(z(j) - zn) * row.cwiseAbs().maxCoeff());
      z(j) = zn;
      auto& pj = prev[static_cast<std::size_t>(j)];
      change = std::max(change, k == 1 ? inf_dist(x, v) : inf_dist(x, pj));
      pj = x;
    }
    out.report.primal_trace.push_back(change);
    check_blowup((z.cwiseAbs().array() * norm2.cwiseSqrt().array()).maxCoeff(), scale);
    done = m == 1 || (k > 1 && settled(change, spread, cfg.tol, scale));
  }
  finish(out.report, k, done, change);
  out.x = std::move(x);
  return out;
}

Solution project_general_linear(const LinearSet& set, const Vector& v, const DykstraConfig& cfg) {
  const auto n = v.size();
  std::vector<ProxFn> fns;
  if (set.A || set.B) {
    if (!set.A || !set.B) fail(ErrorCode::InvalidArgument, "A and B must be given together");
    if (set.A->cols() != n) fail(ErrorCode::DimensionMismatch, "A columns must match v");
    if (set.A->rows() == 1) {
      fns.push_back(projection(Hyperplane{set.A->row(0).transpose(), (*set.B)(0)}));
    } else {
      fns.push_back(projection(AffineSet::make(*set.A, *set.B)));
    }
  }
  if (set.C || set.D) {
    if (!set.C || !set.D) fail(ErrorCode::InvalidArgument, "C and D must be given together");
    if (set.C->cols() != n || set.C->rows() != set.D->size()) fail(ErrorCode::DimensionMismatch, "C/D shape");
    for (Eigen::Index j = 0; j < set.C->rows(); ++j) {
      fns.push_back(projection(Halfspace{set.C->row(j).transpose(), (*set.D)(j)}));
    }
  }
  if (set.lower || set.upper) {
    const double inf = std::numeric_limits<double>::infinity();
    Vector lo = set.lower ? *set.lower : Vector::Constant(n, -inf);
    Vector hi = set.upper ? *set.upper : Vector::Constant(n, inf);
    require_size(lo, n, "lower");
    require_size(hi, n, "upper");
    fns.push_back(projection(Box{lo, hi}));
  }
  if (fns.empty()) {
    Solution out;
    out.x = v;
    out.report.iterations = 1;
    out.report.status = SolverStatus::Converged;
    return out;
  }
  return dykstra_cycle(fns, v, cfg);
}

Solution project_box_ball(const Vector& v, const Vector& lower, const Vector& upper, const Vector& center,
                          double radius, const DykstraConfig& cfg) {
  require_size(center, v.size(), "center");
  std::vector<ProxFn> fns{projection(Box{lower, upper}), projection(LpBall{2, center, radius})};
  return dykstra_cycle(fns, v, cfg);
}

}  // namespace lsopt
