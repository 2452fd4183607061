#include "lsopt/robo_advisor.hpp"

#include "lsopt/cd_engine.hpp"
#include "lsopt/qp_bridge.hpp"

#include <cmath>
#include <memory>

namespace lsopt {

namespace {

struct Resolved {
  Eigen::Index n = 0;
  Vector b, ref, cur, g1, g1_ref, rb, upper;
  Matrix g2, g2_ref;
};

Vector or_value(const Vector& v, Eigen::Index n, double fill, const char* name) {
  if (v.size() == 0) return Vector::Constant(n, fill);
  require_size(v, n, name);
  require_finite(v, name);
  return v;
}

Matrix or_identity(const Matrix& m, Eigen::Index n, const char* name) {
  if (m.size() == 0) return Matrix::Identity(n, n);
  if (m.cols() != n) fail(ErrorCode::DimensionMismatch, std::string(name) + " must have n columns");
  require_finite(m, name);
  return m;
}

Resolved resolve(const AssetUniverse& u, const RoboConfig& cfg) {
  Resolved r;
  r.n = u.size();
  if (r.n == 0) fail(ErrorCode::BadDims, "empty universe");
  r.b = or_value(cfg.benchmark, r.n, 0.0, "benchmark");
  r.ref = or_value(cfg.reference, r.n, 0.0, "reference");
  r.cur = or_value(cfg.current, r.n, 0.0, "current");
  r.g1 = or_value(cfg.gamma1, r.n, 1.0, "gamma1");
  r.g1_ref = or_value(cfg.gamma1_ref, r.n, 1.0, "gamma1_ref");
  r.rb = or_value(cfg.budgets, r.n, 1.0 / static_cast<double>(r.n), "budgets");
  r.upper = or_value(cfg.upper, r.n, 1.0, "upper");
  r.g2 = or_identity(cfg.gamma2, r.n, "gamma2");
  r.g2_ref = or_identity(cfg.gamma2_ref, r.n, "gamma2_ref");
  for (double h : {cfg.gamma, cfg.rho1, cfg.rho2, cfg.rho1_ref, cfg.rho2_ref, cfg.lambda}) {
    if (!(h >= 0.0) || !std::isfinite(h)) fail(ErrorCode::InvalidArgument, "hyperparameters must be finite and >= 0");
  }
  if ((r.g1.array() < 0.0).any() || (r.g1_ref.array() < 0.0).any()) {
    fail(ErrorCode::InvalidArgument, "l1 shaping weights must be >= 0");
  }
  if (cfg.lambda > 0.0 && (r.rb.array() <= 0.0).any()) fail(ErrorCode::NonPositiveWeight, "budgets must be > 0");
  if ((r.upper.array() <= 0.0).any()) fail(ErrorCode::InvertedBounds, "upper bounds must be > 0");
  if (cfg.A.has_value() != cfg.B.has_value() || cfg.C.has_value() != cfg.D.has_value()) {
    fail(ErrorCode::InvalidArgument, "linear constraints need both sides");
  }
  return r;
}

LinearSet linear_set(const RoboConfig& cfg, const Resolved& r) {
  LinearSet s;
  s.A = cfg.A;
  s.B = cfg.B;
  s.C = cfg.C;
  s.D = cfg.D;
  s.lower = Vector::Zero(r.n);
  s.upper = r.upper;
  return s;
}

bool has_linear(const RoboConfig& cfg) { return cfg.A.has_value() || cfg.C.has_value(); }

DykstraConfig inner_config() {
  DykstraConfig c;
  c.tol = 1e-14;
  c.max_cycles = 100000;
  return c;
}

// The l1 terms scaled by 1/phi.
std::vector<ProxFn> l1_terms(const RoboConfig& cfg, const Resolved& r, double phi) {
  std::vector<ProxFn> fns;
  if (cfg.rho1 > 0.0) fns.push_back(prox::l1_weighted(cfg.rho1 / phi * r.g1, r.cur));
  if (cfg.rho1_ref > 0.0) fns.push_back(prox::l1_weighted(cfg.rho1_ref / phi * r.g1_ref, r.ref));
  return fns;
}

ProxFn combine(std::vector<ProxFn> fns) {
  if (fns.empty()) return prox::zero();
  if (fns.size() == 1) return fns.front();
  const DykstraConfig dc = inner_config();
  return ProxFn("robo_y", [fns = std::move(fns), dc](const Vector& v) { return dykstra_cycle(fns, v, dc).x; });
}

Vector start_point(const RoboConfig& cfg, const Resolved& r) {
  Vector x0 = Vector::Constant(r.n, 1.0 / static_cast<double>(r.n));
  if (cfg.lambda > 0.0) return x0.cwiseMin(r.upper);
  return x0;
}

AdmmProblem qp_split(const RoboConfig& cfg, const Resolved& r, const Matrix& Q, const Vector& R) {
  // x-step: the quadratic part with the budget, box and linear constraints.
  QpProblem base;
  const Eigen::Index m = cfg.A ? cfg.A->rows() : 0;
  Matrix A(m + 1, r.n);
  Vector B(m + 1);
  A.row(0).setOnes();
  B(0) = 1.0;
  if (m > 0) {
    A.bottomRows(m) = *cfg.A;
    B.tail(m) = *cfg.B;
  }
  base.A = A;
  base.B = B;
  base.C = cfg.C;
  base.D = cfg.D;
  base.lower = Vector::Zero(r.n);
  base.upper = r.upper;

  auto last = std::make_shared<Vector>(start_point(cfg, r));
  AdmmProblem p;
  p.x_update = [base, Q, R, last](const Vector& y, const Vector& w, double phi) {
    QpProblem qp = base;
    qp.Q = Q;
    qp.Q.diagonal().array() += phi;
    qp.R = R + phi * (y - w);
    QpConfig qc;
    qc.admm.eps = qc.admm.eps_dual = 1e-13;
    qc.start = *last;
    const QpSolution s = qp_solve(qp, qc);
    if (!s.report.converged()) fail(ErrorCode::MaxIterExceeded, "robo x-step QP did not converge");
    *last = s.x;
    return s.x;
  };
  // y-step: l1 terms, the barrier and the nonlinear sets.
  p.y_prox = [cfg, r](double phi) {
    std::vector<ProxFn> fns = l1_terms(cfg, r, phi);
    if (cfg.lambda > 0.0) fns.push_back(prox::log_barrier(cfg.lambda / phi, r.rb));
    for (const ProxFn& f : cfg.nonlinear) fns.push_back(f);
    return combine(std::move(fns));
  };
  return p;
}

AdmmProblem ccd_split(const RoboConfig& cfg, const Resolved& r, const Matrix& Q, const Vector& R) {
  // x-step: the quadratic part with the barrier, solved by CCD.
  auto last = std::make_shared<Vector>(start_point(cfg, r));
  const Vector barrier = cfg.lambda * r.rb;
  const bool log_terms = cfg.lambda > 0.0;
  AdmmProblem p;
  p.x_update = [Q, R, barrier, log_terms, last](const Vector& y, const Vector& w, double phi) {
    Matrix q = Q;
    q.diagonal().array() += phi;
    const Vector rhs = R + phi * (y - w);
    if (!log_terms) return solve_spd(q, rhs);
    CdConfig cc;
    cc.tol = 1e-15;
    cc.max_cycles = 100000;
    Solution s = ccd_qp_logbarrier(q, rhs, barrier, *last, cc);
    *last = s.x;
    return s.x;
  };
  // y-step: l1 terms and every constraint set.
  const ProxFn budget = projection(Hyperplane{Vector::Ones(r.n), 1.0});
  ProxFn bounds = projection(Box{Vector::Zero(r.n), r.upper});
  if (has_linear(cfg)) {
    const LinearSet set = linear_set(cfg, r);
    const DykstraConfig dc = inner_config();
    bounds = ProxFn("linear", [set, dc](const Vector& v) { return project_general_linear(set, v, dc).x; });
  }
  p.y_prox = [cfg, r, budget, bounds](double phi) {
    std::vector<ProxFn> fns = l1_terms(cfg, r, phi);
    fns.push_back(budget);
    fns.push_back(bounds);
    for (const ProxFn& f : cfg.nonlinear) fns.push_back(f);
    return combine(std::move(fns));
  };
  return p;
}

}  // namespace

std::pair<Matrix, Vector> robo_quadratic(const AssetUniverse& u, const RoboConfig& cfg) {
  const Resolved r = resolve(u, cfg);
  const Matrix h2 = r.g2.transpose() * r.g2;
  const Matrix h2_ref = r.g2_ref.transpose() * r.g2_ref;
  Matrix Q = u.cov + cfg.rho2 * h2 + cfg.rho2_ref * h2_ref;
  Vector mu = u.mu.size() ? u.mu : Vector::Zero(r.n);
  Vector R = cfg.gamma * mu + u.cov * r.b + cfg.rho2 * h2 * r.cur + cfg.rho2_ref * h2_ref * r.ref;
  return {Q, R};
}

double robo_objective(const Vector& x, const AssetUniverse& u, const RoboConfig& cfg) {
  const Resolved r = resolve(u, cfg);
  require_size(x, r.n, "x");
  const Vector mu = u.mu.size() ? u.mu : Vector::Zero(r.n);
  const Vector d = x - r.b;
  double f = 0.5 * d.dot(u.cov * d) - cfg.gamma * d.dot(mu);
  f += cfg.rho1 * r.g1.cwiseProduct(x - r.cur).cwiseAbs().sum();
  f += 0.5 * cfg.rho2 * (r.g2 * (x - r.cur)).squaredNorm();
  f += cfg.rho1_ref * r.g1_ref.cwiseProduct(x - r.ref).cwiseAbs().sum();
  f += 0.5 * cfg.rho2_ref * (r.g2_ref * (x - r.ref)).squaredNorm();
  if (cfg.lambda > 0.0) f -= cfg.lambda * r.rb.dot(x.array().log().matrix());
  return f;
}

RoboResult robo_advisor(const AssetUniverse& u, const RoboConfig& cfg) {
  const Resolved r = resolve(u, cfg);
  const auto [Q, R] = robo_quadratic(u, cfg);
  const AdmmProblem p = cfg.formulation == RoboFormulation::AdmmQp ? qp_split(cfg, r, Q, R) : ccd_split(cfg, r, Q, R);
  const Vector x0 = start_point(cfg, r);
  AdmmResult res = admm_solve(p, x0, x0, cfg.admm);
  if (!res.report.converged()) fail(ErrorCode::MaxIterExceeded, "robo-advisor ADMM did not converge");

  // The y iterate carries the barrier (QP split) or the sets (CCD split).
  const Vector& x = cfg.formulation == RoboFormulation::AdmmCcd ? res.y : res.x;
  if (has_linear(cfg)) {
    const LinearSet set = linear_set(cfg, r);
    if (set.A && (*set.A * x - *set.B).cwiseAbs().maxCoeff() > 1e-6) {
      fail(ErrorCode::InfeasibleSuspected, "equality constraints violated");
    }
    if (set.C && (*set.C * x - *set.D).maxCoeff() > 1e-6) fail(ErrorCode::InfeasibleSuspected, "inequalities violated");
  }
  RoboResult out;
  out.weights = normalize_weights(x.cwiseMin(r.upper), true);
  out.report = std::move(res.report);
  return out;
}

RoboResult robo_advisor_checked(const AssetUniverse& u, const RoboConfig& cfg, double tol) {
  RoboConfig qp = cfg;
  qp.formulation = RoboFormulation::AdmmQp;
  RoboConfig cd = cfg;
  cd.formulation = RoboFormulation::AdmmCcd;
  const RoboResult a = robo_advisor(u, qp);
  RoboResult b = robo_advisor(u, cd);
  const double gap = (a.weights.w - b.weights.w).cwiseAbs().maxCoeff();
  if (gap > tol) fail(ErrorCode::FormulationDisagreement, "ADMM-QP and ADMM-CCD differ by " + std::to_string(gap));
  return b;
}

}  // namespace lsopt
