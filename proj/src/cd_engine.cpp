#include "lsopt/cd_engine.hpp"

#include <algorithm>
#include <cmath>

namespace lsopt {

Vector coordinate_probabilities(const CoordinateRule& rule, Eigen::Index n) {
  if (n <= 0) fail(ErrorCode::BadDims, "need at least one coordinate");
  if (std::holds_alternative<Cyclic>(rule) || std::holds_alternative<UniformRandom>(rule)) {
    return Vector::Constant(n, 1.0 / static_cast<double>(n));
  }
  const auto& lw = std::get<LipschitzWeighted>(rule);
  require_size(lw.constants, n, "Lipschitz constants");
  if ((lw.constants.array() <= 0.0).any()) fail(ErrorCode::InvalidArgument, "Lipschitz constants must be > 0");
  Vector p(n);
  if (std::isinf(lw.alpha) && lw.alpha > 0.0) {
    const double top = lw.constants.maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) p(i) = lw.constants(i) == top ? 1.0 : 0.0;
  } else {
    // Normalize by the max before powering to keep large alpha finite.
    const double top = lw.constants.maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) p(i) = std::pow(lw.constants(i) / top, lw.alpha);
  }
  return p / p.sum();
}

CoordinateSequence::CoordinateSequence(const CoordinateRule& rule, Eigen::Index n) : n_(n) {
  if (n <= 0) fail(ErrorCode::BadDims, "need at least one coordinate");
  if (std::holds_alternative<Cyclic>(rule)) return;
  cyclic_ = false;
  const std::uint64_t seed = std::holds_alternative<UniformRandom>(rule) ? std::get<UniformRandom>(rule).seed
                                                                        : std::get<LipschitzWeighted>(rule).seed;
  rng_.seed(seed);
  const Vector p = coordinate_probabilities(rule, n);
  dist_ = std::discrete_distribution<Eigen::Index>(p.data(), p.data() + n);
}

Eigen::Index CoordinateSequence::next() {
  if (cyclic_) {
    const Eigen::Index i = pos_;
    pos_ = (pos_ + 1) % n_;
    return i;
  }
  return dist_(rng_);
}

namespace {

void check_cfg(const CdConfig& cfg) {
  if (!(cfg.tol > 0.0)) fail(ErrorCode::InvalidArgument, "CD tolerance must be > 0");
  if (cfg.max_cycles < 1) fail(ErrorCode::InvalidArgument, "max_cycles must be >= 1");
}

// Drives cycles and records per-cycle snapshots when asked.
Solution run_cycles(const CoordinateProblem& problem, const Vector& x0, const CdConfig& cfg,
                    std::vector<Vector>* snapshots) {
  check_cfg(cfg);
  require_finite(x0, "x0");
  if (!problem.coord_min) fail(ErrorCode::InvalidArgument, "missing coordinate minimizer");
  const Eigen::Index n = x0.size();
  CoordinateSequence seq(cfg.rule, n);
  const bool cyclic = std::holds_alternative<Cyclic>(cfg.rule);
  Solution out;
  Vector x = x0;
  if (snapshots) snapshots->push_back(x);
  if (problem.objective) out.report.objective_trace.push_back(problem.objective(x));
  int k = 0;
  bool done = false;
  double change = 0.0;
  while (k < cfg.max_cycles && !done) {
    ++k;
    const Vector start = x;
    for (Eigen::Index step = 0; step < n; ++step) {
      const Eigen::Index i = seq.next();
      const double xi = problem.coord_min(i, x);
      if (!std::isfinite(xi)) fail(ErrorCode::NonFinite, "coordinate update produced a non-finite value");
      const double delta = xi - x(i);
      if (delta != 0.0) {
        x(i) = xi;
        if (problem.on_change) problem.on_change(i, delta);
      }
    }
    change = (x - start).cwiseAbs().maxCoeff();
    out.report.primal_trace.push_back(change);
    if (problem.objective) out.report.objective_trace.push_back(problem.objective(x));
    if (snapshots) snapshots->push_back(x);
    done = change <= cfg.tol;
    if (done && !cyclic) {
      // A random cycle can skip coordinates; confirm that none of them would move.
      for (Eigen::Index i = 0; i < n && done; ++i) done = std::abs(problem.coord_min(i, x) - x(i)) <= cfg.tol;
    }
  }
  out.report.iterations = std::max(1, done ? k - 1 : k);
  out.report.primal_residual = change;
  out.report.status = done ? SolverStatus::Converged : SolverStatus::MaxIter;
  out.x = std::move(x);
  return out;
}

void check_columns(const Matrix& X, const Vector& Y, const Vector& x0) {
  require_finite(X, "X");
  require_finite(Y, "Y");
  require_size(Y, X.rows(), "Y");
  require_size(x0, X.cols(), "x0");
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (X.col(j).squaredNorm() == 0.0) fail(ErrorCode::ZeroColumn, "column " + std::to_string(j) + " is zero");
  }
}

Solution lasso_impl(const Matrix& X, const Vector& Y, double lambda, const Vector& x0, const CdConfig& cfg,
                    std::vector<Vector>* snapshots) {
  if (lambda < 0.0) fail(ErrorCode::NegativeLambda, "lambda must be >= 0");
  check_columns(X, Y, x0);
  const Vector norms = X.colwise().squaredNorm().transpose();
  Vector resid = Y - X * x0;
  CoordinateProblem p;
  p.coord_min = [&](Eigen::Index j, const Vector& beta) {
    const double rho = X.col(j).dot(resid) + norms(j) * beta(j);
    if (lambda == 0.0) return rho / norms(j);
    const double mag = positive_part(std::abs(rho) - lambda);
    return rho >= 0.0 ? mag / norms(j) : -mag / norms(j);
  };
  p.on_change = [&](Eigen::Index j, double delta) { resid.noalias() -= delta * X.col(j); };
  p.objective = [&](const Vector& beta) {
    return 0.5 * (Y - X * beta).squaredNorm() + lambda * beta.lpNorm<1>();
  };
  return run_cycles(p, x0, cfg, snapshots);
}

void check_quadratic(const Matrix& Q, const Vector& R, const Vector& x0) {
  require_square(Q, "Q");
  require_finite(Q, "Q");
  require_size(R, Q.rows(), "R");
  require_size(x0, Q.rows(), "x0");
  if ((Q.diagonal().array() <= 0.0).any()) fail(ErrorCode::NonPositiveDiagonal, "Q needs a positive diagonal");
}

// Positive root of a t^2 + b t + c = 0 for a > 0, c < 0, free of cancellation.
double positive_root(double a, double b, double c) {
  const double disc = std::sqrt(b * b - 4.0 * a * c);
  return b <= 0.0 ? (-b + disc) / (2.0 * a) : (-2.0 * c) / (b + disc);
}

}  // namespace

Solution ccd_generic(const CoordinateProblem& problem, const Vector& x0, const CdConfig& cfg) {
  return run_cycles(problem, x0, cfg, nullptr);
}

Solution cd_ols(const Matrix& X, const Vector& Y, const Vector& x0, const CdConfig& cfg) {
  return lasso_impl(X, Y, 0.0, x0, cfg, nullptr);
}

Solution cd_lasso(const Matrix& X, const Vector& Y, double lambda, const Vector& x0, const CdConfig& cfg) {
  return lasso_impl(X, Y, lambda, x0, cfg, nullptr);
}

std::vector<Vector> cd_lasso_trace(const Matrix& X, const Vector& Y, double lambda, const Vector& x0,
                                   const CdConfig& cfg) {
  std::vector<Vector> snaps;
  lasso_impl(X, Y, lambda, x0, cfg, &snaps);
  return snaps;
}

Solution ccd_qp_box(const Matrix& Q, const Vector& R, const Vector& lower, const Vector& upper, const Vector& x0,
                    const CdConfig& cfg) {
  check_quadratic(Q, R, x0);
  require_size(lower, R.size(), "lower");
  require_size(upper, R.size(), "upper");
  if ((lower.array() > upper.array()).any()) fail(ErrorCode::InvertedBounds, "lower > upper");
  const Matrix Qs = 0.5 * (Q + Q.transpose());
  Vector qx = Qs * x0;
  CoordinateProblem p;
  p.coord_min = [&](Eigen::Index i, const Vector& x) {
    const double free = (R(i) - (qx(i) - Qs(i, i) * x(i))) / Qs(i, i);
    return std::clamp(free, lower(i), upper(i));
  };
  p.on_change = [&](Eigen::Index i, double delta) { qx.noalias() += delta * Qs.col(i); };
  p.objective = [&](const Vector& x) { return 0.5 * x.dot(Qs * x) - x.dot(R); };
  return run_cycles(p, x0, cfg, nullptr);
}

Solution ccd_qp_logbarrier(const Matrix& Q, const Vector& R, const Vector& lambda, const Vector& x0,
                           const CdConfig& cfg) {
  check_quadratic(Q, R, x0);
  require_size(lambda, R.size(), "lambda");
  if ((lambda.array() <= 0.0).any()) fail(ErrorCode::NegativeLambda, "barrier weights must be > 0");
  if ((x0.array() <= 0.0).any()) fail(ErrorCode::NonPositiveStart, "start must be strictly positive");
  const Matrix Qs = 0.5 * (Q + Q.transpose());
  Vector qx = Qs * x0;
  CoordinateProblem p;
  p.coord_min = [&](Eigen::Index i, const Vector& x) {
    const double b = qx(i) - Qs(i, i) * x(i) - R(i);
    return positive_root(Qs(i, i), b, -lambda(i));
  };
  p.on_change = [&](Eigen::Index i, double delta) { qx.noalias() += delta * Qs.col(i); };
  p.objective = [&](const Vector& x) {
    return 0.5 * x.dot(Qs * x) - x.dot(R) - lambda.dot(x.array().log().matrix());
  };
  return run_cycles(p, x0, cfg, nullptr);
}

Solution ccd_erc(const Matrix& sigma, double lambda, const Vector& x0, const CdConfig& cfg) {
  require_square(sigma, "Sigma");
  require_size(x0, sigma.rows(), "x0");
  if ((sigma.diagonal().array() <= 0.0).any()) fail(ErrorCode::NonPositiveVariance, "variances must be > 0");
  if ((x0.array() <= 0.0).any()) fail(ErrorCode::NonPositiveStart, "start must be strictly positive");
  if (!(lambda > 0.0)) lambda = std::sqrt(x0.dot(sigma * x0));
  const Vector lam = Vector::Constant(x0.size(), lambda);
  return ccd_qp_logbarrier(sigma, Vector::Zero(x0.size()), lam, x0, cfg);
}

Solution ccd_rb_stdev(const Vector& mu, double r, double xi, const Matrix& sigma, const Vector& budgets,
                      double lambda, const Vector& x0, const CdConfig& cfg) {
  require_square(sigma, "Sigma");
  const auto n = sigma.rows();
  require_size(mu, n, "mu");
  require_size(budgets, n, "budgets");
  require_size(x0, n, "x0");
  if (!(xi > 0.0)) fail(ErrorCode::InvalidArgument, "xi must be > 0");
  if ((budgets.array() <= 0.0).any()) fail(ErrorCode::NonPositiveWeight, "budgets must be > 0");
  if ((sigma.diagonal().array() <= 0.0).any()) fail(ErrorCode::NonPositiveVariance, "variances must be > 0");
  if ((x0.array() <= 0.0).any()) fail(ErrorCode::NonPositiveStart, "start must be strictly positive");
  if (!(lambda > 0.0)) lambda = std::sqrt(x0.dot(sigma * x0));
  const Vector excess = mu.array() - r;
  Vector sx = sigma * x0;
  double var = x0.dot(sx);
  CoordinateProblem p;
  p.coord_min = [&](Eigen::Index i, const Vector& x) {
    const double vol = std::sqrt(var);
    const double a = xi * sigma(i, i);
    const double b = xi * (sx(i) - sigma(i, i) * x(i)) - excess(i) * vol;
    const double c = -lambda * vol * budgets(i);
    return positive_root(a, b, c);
  };
  p.on_change = [&](Eigen::Index i, double delta) {
    var += 2.0 * delta * sx(i) + delta * delta * sigma(i, i);
    sx.noalias() += delta * sigma.col(i);
  };
  p.objective = [&](const Vector& x) {
    return -x.dot(excess) + xi * std::sqrt(x.dot(sigma * x)) - lambda * budgets.dot(x.array().log().matrix());
  };
  return run_cycles(p, x0, cfg, nullptr);
}

Solution projected_cd(const std::function<double(Eigen::Index i, const Vector& x)>& grad,
                      const std::vector<ConvexSet>& sets, double eta, const Vector& x0, const CdConfig& cfg) {
  if (!(eta > 0.0)) fail(ErrorCode::InvalidArgument, "step size must be > 0");
  if (static_cast<Eigen::Index>(sets.size()) != x0.size()) {
    fail(ErrorCode::DimensionMismatch, "one set per coordinate required");
  }
  for (const auto& s : sets) validate(s);
  CoordinateProblem p;
  p.coord_min = [&](Eigen::Index i, const Vector& x) {
    Vector v(1);
    v(0) = x(i) - eta * grad(i, x);
    return project(sets[static_cast<std::size_t>(i)], v)(0);
  };
  return run_cycles(p, x0, cfg, nullptr);
}

}  // namespace lsopt
