#include "lsopt/portfolio_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace lsopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Outputs further than this from their declared constraints are solver failures.
constexpr double kGateTol = 1e-6;

// Weights at or below this are treated as zero by the sampling heuristic.
constexpr double kZeroWeight = 1e-7;

constexpr double kLambdaCap = 1e6;

Vector equal_weights(Eigen::Index n) { return Vector::Constant(n, 1.0 / static_cast<double>(n)); }

void check_universe(const AssetUniverse& u) {
  if (u.size() == 0) fail(ErrorCode::BadDims, "empty universe");
  require_size(u.mu, u.size(), "mu");
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

Vector vstack(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

QpSolution solve_checked(const QpProblem& p, const QpConfig& cfg) {
  QpSolution s = qp_solve(p, cfg);
  if (!s.report.converged()) fail(ErrorCode::MaxIterExceeded, "QP did not converge");
  return s;
}

}  // namespace

AdmmConfig model_admm_config() {
  AdmmConfig c;
  c.eps = 1e-10;
  c.eps_dual = 1e-10;
  c.max_iter = 200000;
  return c;
}

PortfolioWeights normalize_weights(Vector w, bool long_only, bool budget) {
  require_finite(w, "weights");
  if (long_only) {
    if (w.size() > 0 && w.minCoeff() < -kGateTol) fail(ErrorCode::OutOfDomain, "long-only weights are negative");
    w = w.cwiseMax(0.0);
  }
  if (budget) {
    const double s = w.sum();
    if (std::abs(s - 1.0) > kGateTol) fail(ErrorCode::OutOfDomain, "weights do not satisfy the budget");
    w /= s;
  }
  return PortfolioWeights{std::move(w), long_only, budget};
}

QpProblem portfolio_qp(const Matrix& Q, const Vector& R, const PortfolioConstraints& c) {
  const auto n = R.size();
  QpProblem p;
  p.Q = Q;
  p.R = R;
  if (c.A.has_value() != c.B.has_value()) fail(ErrorCode::InvalidArgument, "A and B go together");
  if (c.C.has_value() != c.D.has_value()) fail(ErrorCode::InvalidArgument, "C and D go together");
  if (c.budget) {
    const Matrix row = Matrix::Ones(1, n);
    p.A = c.A ? vstack(row, *c.A) : row;
    p.B = c.B ? vstack(Vector::Ones(1), *c.B) : Vector::Ones(1);
  } else if (c.A) {
    p.A = c.A;
    p.B = c.B;
  }
  p.C = c.C;
  p.D = c.D;
  if (c.lower) require_size(*c.lower, n, "lower");
  if (c.upper) require_size(*c.upper, n, "upper");
  if (c.long_only) {
    p.lower = c.lower ? Vector(c.lower->cwiseMax(0.0)) : Vector::Zero(n);
  } else {
    p.lower = c.lower;
  }
  p.upper = c.upper;
  return p;
}

PortfolioWeights mvo_gamma(const AssetUniverse& u, double gamma, const PortfolioConstraints& c, const QpConfig& cfg) {
  check_universe(u);
  if (!(gamma >= 0.0)) fail(ErrorCode::InvalidArgument, "gamma must be >= 0");
  const QpSolution s = solve_checked(portfolio_qp(u.cov, gamma * u.mu, c), cfg);
  return normalize_weights(s.x, c.long_only, c.budget);
}

TargetedPortfolio mvo_target(const AssetUniverse& u, const MvoTarget& target, const PortfolioConstraints& c,
                             const QpConfig& cfg) {
  check_universe(u);
  const bool on_return = std::holds_alternative<ReturnTarget>(target);
  const double goal = on_return ? std::get<ReturnTarget>(target).value : std::get<VolatilityTarget>(target).value;
  auto measure = [&](const Vector& w) { return on_return ? w.dot(u.mu) : portfolio_volatility(w, u.cov); };
  auto solve = [&](double g) { return mvo_gamma(u, g, c, cfg); };

  PortfolioWeights w0 = solve(0.0);
  const double m0 = measure(w0.w);
  const double tol = 1e-7;
  if (std::abs(m0 - goal) <= tol) return {w0, 0.0};
  if (goal < m0) fail(ErrorCode::TargetUnreachable, "target lies below the minimum variance portfolio");

  if (on_return && goal > u.mu.maxCoeff()) fail(ErrorCode::TargetUnreachable, "return target above every asset");
  double hi = 1e-3;
  while (true) {
    double m = 0.0;
    try {
      m = measure(solve(hi).w);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MaxIterExceeded) throw;
      fail(ErrorCode::TargetUnreachable, "target lies above the attainable range");
    }
    if (m >= goal) break;
    hi *= 2.0;
    if (hi > 1e6) fail(ErrorCode::TargetUnreachable, "target lies above the attainable range");
  }
  const double lo = hi > 1e-3 ? hi / 2.0 : 0.0;
  const double g = bisect([&](double t) { return measure(solve(t).w) - goal; }, RootBracket{lo, hi, 1e-9, 300});
  return {solve(g), g};
}

PortfolioWeights mvo_benchmark(const AssetUniverse& u, const Vector& b, double gamma, const PortfolioConstraints& c,
                               const QpConfig& cfg) {
  check_universe(u);
  require_size(b, u.size(), "benchmark");
  if (!(gamma >= 0.0)) fail(ErrorCode::InvalidArgument, "gamma must be >= 0");
  const QpSolution s = solve_checked(portfolio_qp(u.cov, gamma * u.mu + u.cov * b, c), cfg);
  return normalize_weights(s.x, c.long_only, c.budget);
}

SamplingResult index_sampling(const AssetUniverse& u, const Vector& b, Eigen::Index n_x,
                              const PortfolioConstraints& c, const QpConfig& cfg) {
  check_universe(u);
  const auto n = u.size();
  require_size(b, n, "benchmark");
  if (n_x < 1 || n_x > n) fail(ErrorCode::InvalidArgument, "n_x must lie in 1..n");

  PortfolioConstraints cc = c;
  cc.long_only = true;
  Vector upper = c.upper ? *c.upper : Vector::Constant(n, kInf);
  SamplingResult out;
  const Vector R = u.cov * b;
  while (true) {
    cc.upper = upper;
    const Vector x = solve_checked(portfolio_qp(u.cov, R, cc), cfg).x;
    Eigen::Index count = 0;
    Eigen::Index lowest = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x(i) <= kZeroWeight) continue;
      ++count;
      if (lowest < 0 || x(i) < x(lowest)) lowest = i;
    }
    if (count <= n_x) {
      Vector w = (x.array() > kZeroWeight).select(x, 0.0);
      out.weights = normalize_weights(w, true, c.budget);
      out.tracking_error = tracking_error(out.weights.w, b, u.cov);
      return out;
    }
    upper(lowest) = 0.0;
    out.removed.push_back(lowest);
  }
}

RebalanceResult mvo_turnover(const AssetUniverse& u, double gamma, const Vector& x_bar, double cap,
                             const QpConfig& cfg) {
  check_universe(u);
  const auto n = u.size();
  require_size(x_bar, n, "current weights");
  if (!(cap >= 0.0)) fail(ErrorCode::InvalidArgument, "turnover cap must be >= 0");
  if (!(gamma >= 0.0)) fail(ErrorCode::InvalidArgument, "gamma must be >= 0");

  // z = (x, x+, x-), x = x_bar + x+ - x-.
  QpProblem p;
  p.Q = Matrix::Zero(3 * n, 3 * n);
  p.Q.topLeftCorner(n, n) = u.cov;
  p.R = Vector::Zero(3 * n);
  p.R.head(n) = gamma * u.mu;
  Matrix A = Matrix::Zero(n + 1, 3 * n);
  A.block(0, 0, 1, n).setOnes();
  A.block(1, 0, n, n) = Matrix::Identity(n, n);
  A.block(1, n, n, n) = -Matrix::Identity(n, n);
  A.block(1, 2 * n, n, n) = Matrix::Identity(n, n);
  Vector B(n + 1);
  B << 1.0, x_bar;
  p.A = A;
  p.B = B;
  Matrix C = Matrix::Zero(1, 3 * n);
  C.block(0, n, 1, 2 * n).setOnes();
  p.C = C;
  p.D = Vector::Constant(1, cap);
  p.lower = Vector::Zero(3 * n);

  const Vector z = solve_checked(p, cfg).x;
  RebalanceResult out;
  out.weights = normalize_weights(z.head(n), true, true);
  // The split into purchases and sales is not unique at the optimum; report the minimal one.
  const Vector d = out.weights.w - x_bar;
  out.buy = d.cwiseMax(0.0);
  out.sell = (-d).cwiseMax(0.0);
  return out;
}

RebalanceResult mvo_costs(const AssetUniverse& u, double gamma, const Vector& x_bar, const Vector& c_minus,
                          const Vector& c_plus, const QpConfig& cfg) {
  check_universe(u);
  const auto n = u.size();
  require_size(x_bar, n, "current weights");
  require_size(c_minus, n, "c_minus");
  require_size(c_plus, n, "c_plus");
  if ((c_minus.array() < 0.0).any() || (c_plus.array() < 0.0).any()) {
    fail(ErrorCode::NegativeCost, "costs must be >= 0");
  }
  if (!(gamma >= 0.0)) fail(ErrorCode::InvalidArgument, "gamma must be >= 0");

  // z = (x, x-, x+), x = x_bar - x- + x+.
  QpProblem p;
  p.Q = Matrix::Zero(3 * n, 3 * n);
  p.Q.topLeftCorner(n, n) = u.cov;
  p.R.resize(3 * n);
  p.R << gamma * u.mu, -c_minus, -c_plus;
  Matrix A = Matrix::Zero(n + 1, 3 * n);
  A.block(0, 0, 1, n).setOnes();
  A.block(0, n, 1, n) = c_minus.transpose();
  A.block(0, 2 * n, 1, n) = c_plus.transpose();
  A.block(1, 0, n, n) = Matrix::Identity(n, n);
  A.block(1, n, n, n) = Matrix::Identity(n, n);
  A.block(1, 2 * n, n, n) = -Matrix::Identity(n, n);
  Vector B(n + 1);
  B << 1.0, x_bar;
  p.A = A;
  p.B = B;
  p.lower = Vector::Zero(3 * n);

  const Vector z = solve_checked(p, cfg).x;
  RebalanceResult out;
  out.weights = normalize_weights(z.head(n), true, false);
  const Vector d = out.weights.w - x_bar;
  out.buy = d.cwiseMax(0.0);
  out.sell = (-d).cwiseMax(0.0);
  return out;
}

BudgetQpStep::BudgetQpStep(Matrix Q) : Q_(std::move(Q)) { require_square(Q_, "Q"); }

Vector BudgetQpStep::operator()(const Vector& r, const Vector& v, double phi) {
  if (phi != phi_) {
    factor_ = SpdFactor(Q_ + phi * Matrix::Identity(Q_.rows(), Q_.cols()));
    minv_one_ = factor_.solve(Vector::Ones(Q_.rows()));
    phi_ = phi;
  }
  const Vector x = factor_.solve(r + phi * v);
  return x + minv_one_ * ((1.0 - x.sum()) / minv_one_.sum());
}

namespace {

void check_upper(const Vector& upper, Eigen::Index n) {
  require_size(upper, n, "upper");
  if ((upper.array() < 0.0).any()) fail(ErrorCode::InvertedBounds, "upper bounds must be >= 0");
  if (upper.sum() < 1.0 - 1e-12) fail(ErrorCode::InfeasibleSuspected, "upper bounds cannot hold a full budget");
}

Vector gmv_ridge(const AssetUniverse& u, const Vector& upper, double lambda) {
  PortfolioConstraints c = PortfolioConstraints::long_only_budget();
  c.upper = upper;
  const Matrix Q = u.cov + lambda * Matrix::Identity(u.size(), u.size());
  return solve_checked(portfolio_qp(Q, Vector::Zero(u.size()), c), QpConfig{}).x;
}

// Budget hyperplane in the x-step, a y-set projection in the y-step.
HerfindahlResult gmv_admm(const AssetUniverse& u, const ProxFn& y_proj, const AdmmConfig& cfg) {
  const auto n = u.size();
  auto step = std::make_shared<BudgetQpStep>(u.cov);
  AdmmProblem p;
  p.x_update = [step, n](const Vector& y, const Vector& w, double phi) {
    return (*step)(Vector::Zero(n), y - w, phi);
  };
  p.y_prox = [y_proj](double) { return y_proj; };
  const Vector ew = equal_weights(n);
  AdmmResult r = admm_solve(p, ew, ew, cfg);
  if (!r.report.converged()) fail(ErrorCode::MaxIterExceeded, "ADMM did not converge");
  HerfindahlResult out;
  out.weights = normalize_weights(r.y, true, true);
  out.report = std::move(r.report);
  return out;
}

}  // namespace

HerfindahlResult gmv_herfindahl(const AssetUniverse& u, const Vector& upper, double n_min, HerfindahlMethod method) {
  check_universe(u);
  const auto n = u.size();
  check_upper(upper, n);
  const double nd = static_cast<double>(n);
  if (!(n_min >= 1.0 && n_min <= nd + 1e-12)) {
    fail(ErrorCode::UnreachableDiversification, "effective bets must lie in [1, n]");
  }

  if (method == HerfindahlMethod::Admm) return gmv_diversified(u, upper, EffectiveBets{n_min});

  HerfindahlResult out;
  out.report.status = SolverStatus::Converged;
  const Vector x0 = gmv_ridge(u, upper, 0.0);
  out.report.iterations = 1;
  if (effective_bets(x0) >= n_min) {
    out.weights = normalize_weights(x0, true);
    out.lambda = 0.0;
    return out;
  }
  const Vector ew = equal_weights(n);
  const bool ew_feasible = (ew.array() <= upper.array() + 1e-15).all();
  if (n_min >= nd - 1e-12 && ew_feasible) {
    out.weights = normalize_weights(ew, true);
    out.lambda = kInf;
    return out;
  }

  auto gap = [&](double lam) {
    ++out.report.iterations;
    return effective_bets(gmv_ridge(u, upper, lam)) - n_min;
  };
  // Effective bets grow with lambda; bracket on a doubling grid first.
  double lo = 0.0;
  double hi = 1e-3;
  while (gap(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > kLambdaCap) {
      const Vector xc = gmv_ridge(u, upper, kLambdaCap);
      if (ew_feasible && (xc - ew).cwiseAbs().maxCoeff() <= 1e-6) {
        out.weights = normalize_weights(ew, true);
        out.lambda = kInf;
        return out;
      }
      fail(ErrorCode::UnreachableDiversification, "effective bets above the attainable maximum");
    }
  }
  const double lam = bisect(gap, RootBracket{lo, hi, 1e-13, 400});
  out.weights = normalize_weights(gmv_ridge(u, upper, lam), true);
  out.lambda = lam;
  return out;
}

Vector project_entropy_floor(const Vector& v, double se_min) {
  require_finite(v, "v");
  const auto n = v.size();
  const double nd = static_cast<double>(n);
  if (se_min > nd / std::exp(1.0)) fail(ErrorCode::UnreachableDiversification, "entropy floor above n / e");
  if ((v.array() >= 0.0).all() && shannon_entropy(v) >= se_min) return v;

  // x_i + eta ln x_i = v_i - eta, solved through the Lambert W function.
  auto point = [&](double eta) {
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = eta * lambert_w_exp(v(i) / eta - 1.0 - std::log(eta));
    return x;
  };
  auto gap = [&](double log_eta) { return shannon_entropy(point(std::exp(log_eta))) - se_min; };
  double lo = -40.0;
  double hi = 0.0;
  while (gap(hi) < 0.0) {
    lo = hi;
    hi += 5.0;
    if (hi > 200.0) fail(ErrorCode::UnreachableDiversification, "entropy floor not attainable");
  }
  if (gap(lo) >= 0.0) return point(std::exp(lo));
  return point(std::exp(bisect(gap, RootBracket{lo, hi, 1e-15, 500})));
}

HerfindahlResult gmv_diversified(const AssetUniverse& u, const Vector& upper, const DiversificationConstraint& d,
                                 const AdmmConfig& cfg) {
  check_universe(u);
  const auto n = u.size();
  check_upper(upper, n);
  const double nd = static_cast<double>(n);
  const Vector zero = Vector::Zero(n);
  const ProxFn box = projection(Box{zero, upper});

  ProxFn y_proj = box;
  if (const auto* eb = std::get_if<EffectiveBets>(&d)) {
    if (!(eb->n_min >= 1.0 && eb->n_min <= nd + 1e-12)) {
      fail(ErrorCode::UnreachableDiversification, "effective bets must lie in [1, n]");
    }
    const double radius = std::sqrt(1.0 / eb->n_min);
    DykstraConfig dc;
    dc.tol = 1e-14;
    dc.max_cycles = 100000;
    y_proj = ProxFn("box_ball", [zero, upper, radius, dc](const Vector& v) {
      return project_box_ball(v, zero, upper, zero, radius, dc).x;
    });
  } else if (const auto* se = std::get_if<ShannonEntropyFloor>(&d)) {
    const double cap = std::log(nd);
    if (se->se_min > cap + 1e-12) fail(ErrorCode::UnreachableDiversification, "entropy floor above ln n");
    if (se->se_min >= cap - 1e-12) {
      HerfindahlResult out;
      out.weights = normalize_weights(equal_weights(n), true);
      out.report.iterations = 1;
      out.report.status = SolverStatus::Converged;
      return out;
    }
    const double floor = se->se_min;
    const ProxFn ent("entropy_floor", [floor](const Vector& v) { return project_entropy_floor(v, floor); });
    DykstraConfig dc;
    dc.tol = 1e-14;
    dc.max_cycles = 100000;
    y_proj = ProxFn("box_entropy", [box, ent, dc](const Vector& v) { return dykstra_two(box, ent, v, dc).x; });
  }
  return gmv_admm(u, y_proj, cfg);
}

HerfindahlResult rebalance_penalized(const AssetUniverse& u, const RebalanceContext& ctx, const AdmmConfig& cfg) {
  check_universe(u);
  const auto n = u.size();
  require_size(ctx.current, n, "current weights");
  const Vector cm = ctx.c_minus ? *ctx.c_minus : Vector::Zero(n);
  const Vector cp = ctx.c_plus ? *ctx.c_plus : Vector::Zero(n);
  require_size(cm, n, "c_minus");
  require_size(cp, n, "c_plus");
  if ((cm.array() < 0.0).any() || (cp.array() < 0.0).any()) fail(ErrorCode::NegativeCost, "costs must be >= 0");
  if (!(ctx.cost_scale >= 0.0)) fail(ErrorCode::InvalidArgument, "cost scale must be >= 0");
  if (ctx.turnover_cap && !(*ctx.turnover_cap >= 0.0)) fail(ErrorCode::InvalidArgument, "turnover cap must be >= 0");
  const Vector upper = ctx.upper ? *ctx.upper : Vector::Ones(n);
  check_upper(upper, n);

  const Vector xt = ctx.current;
  const Vector zero = Vector::Zero(n);
  const double scale = ctx.cost_scale;
  const std::optional<double> cap = ctx.turnover_cap;
  auto step = std::make_shared<BudgetQpStep>(u.cov);
  AdmmProblem p;
  p.x_update = [step, n](const Vector& y, const Vector& w, double phi) {
    return (*step)(Vector::Zero(n), y - w, phi);
  };
  p.y_prox = [=](double phi) {
    // Separable cost plus box: clip the scalar prox.
    ProxFn cost_box("cost_box", [=](const Vector& v) {
      const Vector moved = xt + soft_threshold_two_sided(v - xt, scale * cm / phi, scale * cp / phi);
      return Vector(moved.cwiseMax(zero).cwiseMin(upper));
    });
    if (!cap) return cost_box;
    const double r = *cap;
    ProxFn ball("turnover", [xt, r](const Vector& v) { return prox_turnover(v, xt, r); });
    DykstraConfig dc;
    dc.tol = 1e-14;
    dc.max_cycles = 100000;
    return ProxFn("cost_box_turnover",
                  [cost_box, ball, dc](const Vector& v) { return dykstra_two(cost_box, ball, v, dc).x; });
  };
  const Vector ew = equal_weights(n);
  AdmmResult r = admm_solve(p, xt, xt, cfg);
  if (!r.report.converged()) fail(ErrorCode::MaxIterExceeded, "ADMM did not converge");
  HerfindahlResult out;
  out.weights = normalize_weights(r.y, true, true);
  out.report = std::move(r.report);
  return out;
}

EllipsoidProjector::EllipsoidProjector(const Matrix& S, double radius) : r2_(radius * radius) {
  require_square(S, "S");
  if (!(radius >= 0.0)) fail(ErrorCode::InvalidArgument, "radius must be >= 0");
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  if (es.info() != Eigen::Success) fail(ErrorCode::NonFinite, "eigendecomposition failed");
  vals_ = es.eigenvalues().cwiseMax(0.0);
  vecs_ = es.eigenvectors();
}

Vector EllipsoidProjector::operator()(const Vector& v) const {
  const Vector w = vecs_.transpose() * v;
  auto level = [&](double eta) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double z = w(i) / (1.0 + eta * vals_(i));
      s += vals_(i) * z * z;
    }
    return s - r2_;
  };
  if (level(0.0) <= 0.0) return v;
  double hi = 1.0;
  while (level(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e300) fail(ErrorCode::EmptySetSuspected, "ellipsoid projection diverged");
  }
  // Plain bisection down to adjacent doubles; level() is monotone in eta.
  double lo = 0.0;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (level(mid) > 0.0 ? lo : hi) = mid;
  }
  const double eta = hi;
  Vector z = w;
  for (Eigen::Index i = 0; i < w.size(); ++i) z(i) /= 1.0 + eta * vals_(i);
  return vecs_ * z;
}

HerfindahlResult kl_portfolio(const AssetUniverse& u, const Vector& ref, double mu_min, double sigma_max,
                              const AdmmConfig& cfg) {
  check_universe(u);
  const auto n = u.size();
  require_size(ref, n, "reference");
  if ((ref.array() <= 0.0).any()) fail(ErrorCode::NonPositiveWeight, "reference weights must be > 0");
  if (std::isnan(mu_min) || std::isnan(sigma_max) || sigma_max < 0.0) {
    fail(ErrorCode::InvalidArgument, "targets must be numbers, sigma_max >= 0");
  }
  if (std::isfinite(mu_min) && mu_min > u.mu.maxCoeff() + 1e-12) {
    fail(ErrorCode::InfeasibleTargets, "return target above the best single asset");
  }

  // The least volatile portfolio meeting the return target decides feasibility up front.
  if (std::isfinite(sigma_max)) {
    PortfolioConstraints c = PortfolioConstraints::long_only_budget();
    c.upper = Vector::Ones(n);
    if (std::isfinite(mu_min)) {
      c.C = Matrix(-u.mu.transpose());
      c.D = Vector::Constant(1, -mu_min);
    }
    Vector xmin;
    try {
      xmin = solve_checked(portfolio_qp(u.cov, Vector::Zero(n), c), QpConfig{}).x;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InfeasibleSuspected) fail(ErrorCode::InfeasibleTargets, e.what());
      throw;
    }
    if (portfolio_volatility(xmin, u.cov) > sigma_max + 1e-9) {
      fail(ErrorCode::InfeasibleTargets, "volatility target below the least volatile admissible portfolio");
    }
  }

  std::vector<ProxFn> sets{projection(Hyperplane{Vector::Ones(n), 1.0}),
                           projection(Box{Vector::Zero(n), Vector::Ones(n)})};
  if (std::isfinite(mu_min)) sets.push_back(projection(Halfspace{-u.mu, -mu_min}));
  if (std::isfinite(sigma_max)) {
    auto ell = std::make_shared<EllipsoidProjector>(u.cov, sigma_max);
    sets.emplace_back("ellipsoid", [ell](const Vector& v) { return (*ell)(v); });
  }
  DykstraConfig dc;
  dc.tol = 1e-14;
  dc.max_cycles = 20000;
  const ProxFn feasible("kl_feasible", [sets, dc](const Vector& v) { return dykstra_cycle(sets, v, dc).x; });

  AdmmProblem p;
  p.x_update = [ref](const Vector& y, const Vector& w, double phi) {
    const double lam = 1.0 / phi;
    const Vector v = y - w;
    return prox_kl(Vector(v.array() + lam * (1.0 / ref.array() - 1.0)), lam, ref);
  };
  p.y_prox = [feasible](double) { return feasible; };
  const Vector x0 = ref / ref.sum();
  AdmmResult r;
  try {
    r = admm_solve(p, x0, x0, cfg);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptySetSuspected) fail(ErrorCode::InfeasibleTargets, e.what());
    throw;
  }
  if (!r.report.converged()) fail(ErrorCode::InfeasibleTargets, "ADMM did not converge; targets are probably inconsistent");
  const Vector& x = r.y;
  if (std::isfinite(mu_min) && x.dot(u.mu) < mu_min - 1e-6) fail(ErrorCode::InfeasibleTargets, "return target missed");
  if (std::isfinite(sigma_max) && portfolio_volatility(x, u.cov) > sigma_max + 1e-6) {
    fail(ErrorCode::InfeasibleTargets, "volatility target missed");
  }
  HerfindahlResult out;
  out.weights = normalize_weights(x, true, true);
  out.report = std::move(r.report);
  return out;
}

double negative_curvature(const Matrix& M) {
  require_square(M, "M");
  const auto n = M.rows();
  if (n == 0) return 0.0;
  auto power = [n](const Matrix& A) {
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = 1.0 + 0.1 * static_cast<double>(i % 7);
    x.normalize();
    double lam = 0.0;
    for (int it = 0; it < 10000; ++it) {
      Vector y = A * x;
      const double next = x.dot(y);
      const double norm = y.norm();
      if (norm == 0.0) return 0.0;
      x = y / norm;
      if (it > 0 && std::abs(next - lam) <= 1e-12 * (1.0 + std::abs(next))) return next;
      lam = next;
    }
    return lam;
  };
  // Shift by the spectral radius so the smallest eigenvalue becomes dominant.
  const double rho = M.cwiseAbs().rowwise().sum().maxCoeff();
  const Matrix shifted = rho * Matrix::Identity(n, n) - M;
  const double lmin = rho - power(shifted);
  return lmin < 0.0 ? -lmin : 0.0;
}

HerfindahlResult rqe_portfolio(const Matrix& D, const PortfolioConstraints& c, const QpConfig& cfg) {
  require_square(D, "D");
  require_finite(D, "D");
  const auto n = D.rows();
  if (n == 0) fail(ErrorCode::BadDims, "empty matrix");
  if (!is_symmetric(D, 1e-12)) fail(ErrorCode::InvalidArgument, "D must be symmetric");
  if ((D.array() < 0.0).any()) fail(ErrorCode::OutOfDomain, "D must be non-negative");
  if (D.diagonal().cwiseAbs().maxCoeff() > 0.0) fail(ErrorCode::OutOfDomain, "D must have a zero diagonal");

  const QpProblem p = portfolio_qp(D, Vector::Zero(n), c);
  const double curv = negative_curvature(D);
  QpConfig qc = cfg;
  if (curv > 0.0) {
    // Adaptive penalties diverge on concave directions; hold phi fixed well above the curvature.
    qc.admm.phi_min = std::max(qc.admm.phi_min, 1.1 * curv);
    qc.admm.adaptive = false;
    qc.phi0 = std::max(qc.phi0, 5.0 * curv);
  }

  auto attempt = [&](const Vector& start) -> std::optional<QpSolution> {
    QpConfig a = qc;
    a.start = start;
    try {
      QpSolution s = qp_solve(p, a);
      if (s.report.converged()) return s;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InfeasibleSuspected && e.code() != ErrorCode::NonFinite &&
          e.code() != ErrorCode::MaxIterExceeded) {
        throw;
      }
    }
    return std::nullopt;
  };

  const Vector ew = equal_weights(n);
  std::optional<QpSolution> best = attempt(ew);
  double best_value = best ? p.objective(best->x) : kInf;
  const double margin = 1e-9 * (1.0 + D.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n && curv > 0.0; ++i) {
    Vector start = 0.5 * ew;
    start(i) += 0.5;
    std::optional<QpSolution> s = attempt(start);
    if (!s) continue;
    const double value = p.objective(s->x);
    if (value < best_value - margin) {
      best = std::move(s);
      best_value = value;
    }
  }
  if (!best) fail(ErrorCode::IndefiniteUnhandled, "ADMM did not converge on the indefinite quadratic");
  HerfindahlResult out;
  out.weights = normalize_weights(best->x, c.long_only, c.budget);
  out.report = std::move(best->report);
  return out;
}

}  // namespace lsopt
