#include "lsopt/risk_models.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace lsopt {

namespace {

Vector equal_weights(Eigen::Index n) { return Vector::Constant(n, 1.0 / static_cast<double>(n)); }

void check_universe(const AssetUniverse& u) {
  if (u.size() == 0) fail(ErrorCode::BadDims, "empty universe");
  if ((u.cov.diagonal().array() <= 0.0).any()) fail(ErrorCode::NonPositiveVariance, "variances must be > 0");
}

RiskResult finish(Solution s) {
  if (!s.report.converged()) fail(ErrorCode::MaxIterExceeded, "risk budgeting did not converge");
  if ((s.x.array() <= 0.0).any()) fail(ErrorCode::OutOfDomain, "risk budgeting left the positive orthant");
  RiskResult out;
  out.unscaled = s.x;
  out.weights = normalize_weights(s.x / s.x.sum(), true);
  out.report = std::move(s.report);
  return out;
}

}  // namespace

double risk_measure(const Vector& w, const AssetUniverse& u, const RiskMeasure& measure) {
  const double vol = portfolio_volatility(w, u.cov);
  if (const auto* m = std::get_if<StdevMeasure>(&measure)) return -w.dot((u.mu.array() - m->r).matrix()) + m->xi * vol;
  return vol;
}

Vector measure_contributions(const Vector& w, const AssetUniverse& u, const RiskMeasure& measure) {
  if (const auto* m = std::get_if<StdevMeasure>(&measure)) return risk_contributions(w, u.cov, u.mu, m->r, m->xi);
  return volatility_contributions(w, u.cov);
}

Vector prox_stdev_measure(const Vector& v, double phi, const Vector& excess_mu, double xi, const Matrix& cov) {
  if (!(phi > 0.0)) fail(ErrorCode::InvalidArgument, "phi must be > 0");
  const auto n = v.size();
  const Vector rhs = excess_mu + phi * v;
  Vector x = v;
  for (int it = 0; it < 10000; ++it) {
    const double vol = std::sqrt(std::max(0.0, x.dot(cov * x)));
    // Near the origin the volatility term is not differentiable; the prox then collapses to zero.
    if (vol <= 1e-300) return Vector::Zero(n);
    const Matrix m = xi / vol * cov + phi * Matrix::Identity(n, n);
    const Vector next = solve_spd(m, rhs);
    const double change = (next - x).cwiseAbs().maxCoeff();
    x = next;
    if (change <= 1e-15 * (1.0 + x.cwiseAbs().maxCoeff())) return x;
  }
  fail(ErrorCode::MaxIterExceeded, "standard-deviation prox fixed point did not settle");
}

RiskResult risk_budgeting(const AssetUniverse& u, const Vector& budgets, const RiskMeasure& measure, RbEngine engine,
                          const RbConfig& cfg) {
  check_universe(u);
  const auto n = u.size();
  require_size(budgets, n, "budgets");
  require_finite(budgets, "budgets");
  if ((budgets.array() <= 0.0).any()) fail(ErrorCode::NonPositiveWeight, "budgets must be > 0");
  const Vector rb = budgets / budgets.sum();
  const Vector x0 = cfg.x0 ? *cfg.x0 : equal_weights(n);
  require_size(x0, n, "x0");
  if ((x0.array() <= 0.0).any()) fail(ErrorCode::NonPositiveStart, "start must be strictly positive");
  const StdevMeasure* sm = std::get_if<StdevMeasure>(&measure);
  if (sm && !(sm->xi > 0.0)) fail(ErrorCode::InvalidArgument, "xi must be > 0");

  if (engine == RbEngine::Ccd) {
    const double lam = cfg.lambda > 0.0 ? cfg.lambda : std::sqrt(x0.dot(u.cov * x0));
    if (sm) return finish(ccd_rb_stdev(u.mu, sm->r, sm->xi, u.cov, rb, lam, x0, cfg.cd));
    return finish(ccd_qp_logbarrier(u.cov, Vector::Zero(n), lam * rb, x0, cfg.cd));
  }

  const double lam = cfg.lambda > 0.0 ? cfg.lambda : 1.0;
  AdmmProblem p;
  if (sm) {
    const Vector excess = (u.mu.array() - sm->r).matrix();
    const double xi = sm->xi;
    const Matrix cov = u.cov;
    p.x_update = [excess, xi, cov](const Vector& y, const Vector& w, double phi) {
      return prox_stdev_measure(y - w, phi, excess, xi, cov);
    };
  } else {
    // Quadratic form of the volatility: the x-step is a ridge solve.
    auto cache = std::make_shared<std::pair<double, SpdFactor>>(-1.0, SpdFactor{});
    const Matrix cov = u.cov;
    p.x_update = [cache, cov](const Vector& y, const Vector& w, double phi) {
      if (cache->first != phi) {
        cache->second = SpdFactor(cov + phi * Matrix::Identity(cov.rows(), cov.cols()));
        cache->first = phi;
      }
      return cache->second.solve(phi * (y - w));
    };
  }
  p.y_prox = [rb, lam](double phi) { return prox::log_barrier(lam / phi, rb); };
  AdmmResult r = admm_solve(p, x0, x0, cfg.admm);
  return finish(Solution{r.y, std::move(r.report)});
}

RiskResult erc(const AssetUniverse& u, RbEngine engine, const RbConfig& cfg) {
  return risk_budgeting(u, Vector::Ones(u.size()), VolatilityMeasure{}, engine, cfg);
}

Vector mdp_regularized_step(const Matrix& cov, const Vector& sigma, const Vector& v, double phi, const Vector& start) {
  const auto n = v.size();
  const Vector one = Vector::Ones(n);
  auto value = [&](const Vector& x) {
    const double q = x.dot(cov * x);
    const double s = x.dot(sigma);
    if (!(q > 0.0) || !(s > 0.0)) return std::numeric_limits<double>::infinity();
    return 0.5 * std::log(q) - std::log(s) + 0.5 * phi * (x - v).squaredNorm();
  };
  auto tangent = [&](const Vector& g) { return Vector(g.array() - g.mean()); };

  Vector x = start.array() + (1.0 - start.sum()) / static_cast<double>(n);
  if (!std::isfinite(value(x))) x = equal_weights(n);
  double fx = value(x);
  for (int it = 0; it < 500; ++it) {
    const Vector sx = cov * x;
    const double q = x.dot(sx);
    const double s = x.dot(sigma);
    const Vector g = sx / q - sigma / s + phi * (x - v);
    const Vector pg = tangent(g);
    if (pg.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + g.cwiseAbs().maxCoeff())) break;

    // Newton direction on the hyperplane via the KKT system.
    Matrix H = cov / q - 2.0 * sx * sx.transpose() / (q * q) + sigma * sigma.transpose() / (s * s);
    H.diagonal().array() += phi;
    Matrix K = Matrix::Zero(n + 1, n + 1);
    K.topLeftCorner(n, n) = H;
    K.block(0, n, n, 1) = one;
    K.block(n, 0, 1, n) = one.transpose();
    Vector rhs = Vector::Zero(n + 1);
    rhs.head(n) = -g;
    Vector d = K.fullPivLu().solve(rhs).head(n);
    d = tangent(d);
    const bool newton = d.allFinite() && d.dot(g) < 0.0 && d.dot(H * d) > 0.0;
    if (!newton) d = -pg;

    // Armijo backtracking keeps the iterate inside the domain.
    double t = 1.0;
    const double slope = d.dot(g);
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vector xn = x + t * d;
      const double fn = value(xn);
      if (fn <= fx + 1e-4 * t * slope) {
        moved = fn < fx || (xn - x).cwiseAbs().maxCoeff() > 0.0;
        x = xn;
        fx = fn;
        break;
      }
      t *= 0.5;
    }
    if (!moved && newton) {
      // Near the optimum the decrease drowns in rounding; judge the full step by the gradient.
      const Vector xn = x + d;
      const double qn = xn.dot(cov * xn);
      const double sn = xn.dot(sigma);
      if (qn > 0.0 && sn > 0.0) {
        const Vector gn = cov * xn / qn - sigma / sn + phi * (xn - v);
        if (tangent(gn).norm() < pg.norm()) {
          x = xn;
          fx = value(xn);
          moved = true;
        }
      }
    }
    if (!moved) break;
  }
  return x;
}

RiskResult mdp(const AssetUniverse& u, bool long_only, const DiversificationConstraint& d, const AdmmConfig& cfg) {
  check_universe(u);
  const auto n = u.size();
  if ((u.sigma.array() <= 0.0).any()) fail(ErrorCode::NonPositiveVariance, "volatilities must be > 0");
  const bool diversified = !std::holds_alternative<NoDiversification>(d);

  if (!long_only && !diversified) {
    const Vector x = solve_spd(u.cov, u.sigma);
    RiskResult out;
    out.unscaled = x;
    out.weights = normalize_weights(x / x.sum(), false);
    out.report.iterations = 1;
    out.report.status = SolverStatus::Converged;
    return out;
  }

  const double nd = static_cast<double>(n);
  const Vector lo = long_only ? Vector::Zero(n) : Vector::Constant(n, -std::numeric_limits<double>::infinity());
  const Vector hi = long_only ? Vector::Ones(n) : Vector::Constant(n, std::numeric_limits<double>::infinity());
  const ProxFn box = projection(Box{lo, hi});
  DykstraConfig dc;
  dc.tol = 1e-14;
  dc.max_cycles = 100000;
  ProxFn y_proj = box;
  if (const auto* eb = std::get_if<EffectiveBets>(&d)) {
    if (!(eb->n_min >= 1.0 && eb->n_min <= nd + 1e-12)) {
      fail(ErrorCode::UnreachableDiversification, "effective bets must lie in [1, n]");
    }
    if (eb->n_min >= nd - 1e-12) {
      RiskResult out;
      out.unscaled = equal_weights(n);
      out.weights = normalize_weights(out.unscaled, long_only);
      out.report.iterations = 1;
      out.report.status = SolverStatus::Converged;
      return out;
    }
    const double radius = std::sqrt(1.0 / eb->n_min);
    const Vector zero = Vector::Zero(n);
    y_proj = ProxFn("box_ball", [lo, hi, zero, radius, dc](const Vector& v) {
      return project_box_ball(v, lo, hi, zero, radius, dc).x;
    });
  } else if (const auto* se = std::get_if<ShannonEntropyFloor>(&d)) {
    if (se->se_min > std::log(nd) + 1e-12) fail(ErrorCode::UnreachableDiversification, "entropy floor above ln n");
    const double floor = se->se_min;
    const ProxFn ent("entropy_floor", [floor](const Vector& v) { return project_entropy_floor(v, floor); });
    y_proj = ProxFn("box_entropy", [box, ent, dc](const Vector& v) { return dykstra_two(box, ent, v, dc).x; });
  }

  auto last = std::make_shared<Vector>(equal_weights(n));
  const Matrix cov = u.cov;
  const Vector sigma = u.sigma;
  AdmmProblem p;
  p.x_update = [last, cov, sigma](const Vector& y, const Vector& w, double phi) {
    *last = mdp_regularized_step(cov, sigma, y - w, phi, *last);
    return *last;
  };
  p.y_prox = [y_proj](double) { return y_proj; };
  const Vector ew = equal_weights(n);
  AdmmResult r = admm_solve(p, ew, ew, cfg);
  if (!r.report.converged()) fail(ErrorCode::MaxIterExceeded, "ADMM did not converge");
  RiskResult out;
  out.unscaled = r.y;
  out.weights = normalize_weights(r.y, long_only);
  out.report = std::move(r.report);
  return out;
}

}  // namespace lsopt
