#include "lsopt/admm_engine.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace lsopt {

namespace {

void check_cfg(const AdmmConfig& cfg) {
  if (!(cfg.phi0 > 0.0)) fail(ErrorCode::InvalidArgument, "phi0 must be > 0");
  if (cfg.mu < 1.0 || cfg.tau < 1.0 || cfg.tau_prime < 1.0) {
    fail(ErrorCode::InvalidArgument, "mu, tau and tau' must be >= 1");
  }
  if (!(cfg.eps > 0.0) || !(cfg.eps_dual > 0.0)) fail(ErrorCode::InvalidArgument, "tolerances must be > 0");
  if (cfg.max_iter < 1) fail(ErrorCode::InvalidArgument, "max_iter must be >= 1");
}

Vector apply(const std::optional<Matrix>& M, const Vector& v, double identity_sign) {
  return M ? Vector(*M * v) : Vector(identity_sign * v);
}

Vector apply_t(const std::optional<Matrix>& M, const Vector& v, double identity_sign) {
  return M ? Vector(M->transpose() * v) : Vector(identity_sign * v);
}

// Caches the factor of X'X + phi I for the current phi.
class RidgeSolver {
 public:
  RidgeSolver(const Matrix& X, const Vector& Y) : gram_(X.transpose() * X), xty_(X.transpose() * Y) {}

  Vector solve(const Vector& rhs_shift, double phi) {
    if (phi != phi_) {
      factor_ = SpdFactor(gram_ + phi * Matrix::Identity(gram_.rows(), gram_.cols()));
      phi_ = phi;
    }
    return factor_.solve(xty_ + phi * rhs_shift);
  }

  const Matrix& gram() const { return gram_; }
  const Vector& xty() const { return xty_; }

 private:
  Matrix gram_;
  Vector xty_;
  SpdFactor factor_;
  double phi_ = -1.0;
};

}  // namespace

double penalty_update(double phi, double r_norm, double s_norm, const AdmmConfig& cfg) {
  if (!(phi > 0.0)) fail(ErrorCode::InvalidArgument, "phi must be > 0");
  const double r2 = r_norm * r_norm;
  const double s2 = s_norm * s_norm;
  double next = phi;
  if (r2 > cfg.mu * s2) {
    next = cfg.tau * phi;
  } else if (s2 > cfg.mu * r2) {
    next = phi / cfg.tau_prime;
  }
  return std::clamp(next, cfg.phi_min, cfg.phi_max);
}

AdmmResult admm_solve(const AdmmProblem& problem, const Vector& x0, const Vector& y0, const AdmmConfig& cfg) {
  check_cfg(cfg);
  if (!problem.x_update) fail(ErrorCode::InvalidArgument, "missing x-update");
  if (!problem.y_prox && !problem.y_update) fail(ErrorCode::InvalidArgument, "missing y-update");
  if (problem.y_prox && problem.B) fail(ErrorCode::InvalidArgument, "a prox y-step needs B = -I");
  require_finite(x0, "x0");
  require_finite(y0, "y0");

  const Vector ax0 = apply(problem.A, x0, 1.0);
  const Vector by0 = apply(problem.B, y0, -1.0);
  if (ax0.size() != by0.size()) fail(ErrorCode::DimensionMismatch, "A x and B y differ in length");
  const Vector c = problem.c ? *problem.c : Vector::Zero(ax0.size());
  require_size(c, ax0.size(), "c");

  AdmmResult res;
  Vector x = x0;
  Vector y = y0;
  Vector u = Vector::Zero(c.size());
  double phi = std::clamp(cfg.phi0, cfg.phi_min, cfg.phi_max);
  double r_norm = 0.0;
  double s_norm = 0.0;
  int k = 0;
  bool done = false;
  while (k < cfg.max_iter && !done) {
    ++k;
    x = problem.x_update(y, u, phi);
    const Vector ax = apply(problem.A, x, 1.0);
    Vector y_new;
    if (problem.y_prox) {
      y_new = problem.y_prox(phi)(ax - c + u);
    } else {
      y_new = problem.y_update(x, u, phi);
    }
    const Vector by = apply(problem.B, y_new, -1.0);
    const Vector r = ax + by - c;
    const Vector dy = apply(problem.B, y_new - y, -1.0);
    const Vector s = phi * apply_t(problem.A, dy, 1.0);
    y = std::move(y_new);
    u += r;
    r_norm = r.norm();
    s_norm = s.norm();
    if (!std::isfinite(r_norm) || !std::isfinite(s_norm)) {
      fail(ErrorCode::NonFinite, "ADMM residuals became non-finite");
    }
    res.report.primal_trace.push_back(r_norm);
    res.report.dual_trace.push_back(s_norm);
    if (problem.objective) res.report.objective_trace.push_back(problem.objective(x, y));
    done = r_norm <= cfg.eps && s_norm <= cfg.eps_dual;
    if (!done && cfg.adaptive) {
      const double next = penalty_update(phi, r_norm, s_norm, cfg);
      if (next != phi) {
        u *= phi / next;
        phi = next;
      }
    }
  }
  res.x = std::move(x);
  res.y = std::move(y);
  res.u = std::move(u);
  res.phi = phi;
  res.report.iterations = k;
  res.report.primal_residual = r_norm;
  res.report.dual_residual = s_norm;
  res.report.status = done ? SolverStatus::Converged : SolverStatus::MaxIter;
  return res;
}

namespace {

Solution lasso_admm(const Matrix& X, const Vector& Y, const ProxBuilder& y_prox, const AdmmConfig& cfg,
                    const std::optional<Vector>& warm, std::function<double(const Vector&)> penalty) {
  require_finite(X, "X");
  require_size(Y, X.rows(), "Y");
  const auto p = X.cols();
  auto ridge = std::make_shared<RidgeSolver>(X, Y);
  AdmmProblem prob;
  prob.x_update = [ridge](const Vector& y, const Vector& u, double phi) { return ridge->solve(y - u, phi); };
  prob.y_prox = y_prox;
  prob.objective = [&X, &Y, penalty](const Vector&, const Vector& y) {
    return 0.5 * (Y - X * y).squaredNorm() + penalty(y);
  };
  Vector start = warm ? *warm : Vector::Zero(p);
  require_size(start, p, "warm start");
  AdmmResult r = admm_solve(prob, start, start, cfg);
  Solution out;
  out.x = std::move(r.y);
  out.report = std::move(r.report);
  return out;
}

}  // namespace

Solution admm_lasso_lambda(const Matrix& X, const Vector& Y, double lambda, const AdmmConfig& cfg,
                           const std::optional<Vector>& warm) {
  if (lambda < 0.0) fail(ErrorCode::NegativeLambda, "lambda must be >= 0");
  ProxBuilder yp = [lambda](double phi) {
    return ProxFn("l1", [t = lambda / phi](const Vector& v) { return soft_threshold(v, t); });
  };
  return lasso_admm(X, Y, yp, cfg, warm, [lambda](const Vector& b) { return lambda * b.lpNorm<1>(); });
}

ProxBuilder l1_ball_prox_builder(double tau) {
  if (!(tau > 0.0)) fail(ErrorCode::InvalidArgument, "tau must be > 0");
  return [tau](double) {
    return ProxFn("l1_ball", [tau](const Vector& v) {
      // v - sign(v) prox_{tau max}(|v|), the Moreau form of the l1-ball projection.
      const Vector a = v.cwiseAbs();
      if (a.sum() <= tau) return v;
      const Vector m = prox_max(a, tau);
      Vector out(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = v(i) - (v(i) >= 0.0 ? 1.0 : -1.0) * m(i);
      return out;
    });
  };
}

Solution admm_lasso_tau(const Matrix& X, const Vector& Y, double tau, const AdmmConfig& cfg,
                        const std::optional<Vector>& warm) {
  return lasso_admm(X, Y, l1_ball_prox_builder(tau), cfg, warm, [](const Vector&) { return 0.0; });
}

}  // namespace lsopt
