#include "lsopt/prox_ops.hpp"

#include "lsopt/dykstra.hpp"

#include <cmath>
#include <type_traits>

namespace lsopt {

Vector ProxFn::operator()(const Vector& v) const {
  if (!fn_) fail(ErrorCode::InvalidArgument, "empty prox");
  return fn_(v);
}

AffineSet AffineSet::make(Matrix A, Vector B) {
  if (A.rows() != B.size()) fail(ErrorCode::DimensionMismatch, "affine set rows");
  AffineSet s;
  s.pinv = std::make_shared<const Matrix>(pseudo_inverse(A));
  s.A = std::move(A);
  s.B = std::move(B);
  return s;
}

namespace {

double sign_nonneg(double a) { return a >= 0.0 ? 1.0 : -1.0; }

double sign(double a) { return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0); }

void require_dim(const Vector& v, Eigen::Index n) { require_size(v, n, "v"); }

Vector project_l1_ball(const Vector& v, const Vector& c, double r) {
  const Vector d = v - c;
  if (d.lpNorm<1>() <= r) return v;
  const double s = threshold_sum_root(d.cwiseAbs(), r);
  Vector x = v;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    x(i) -= sign(d(i)) * std::min(std::abs(d(i)), s);
  }
  return x;
}

Vector project_l2_ball(const Vector& v, const Vector& c, double r) {
  const Vector d = v - c;
  const double nd = d.norm();
  if (nd <= r) return v;
  return c + (r / nd) * d;
}

Vector project_impl(const Hyperplane& s, const Vector& v) {
  require_dim(v, s.a.size());
  return v - ((s.a.dot(v) - s.b) / s.a.squaredNorm()) * s.a;
}

Vector project_impl(const Halfspace& s, const Vector& v) {
  require_dim(v, s.c.size());
  const double excess = s.c.dot(v) - s.d;
  if (excess <= 0.0) return v;
  return v - (excess / s.c.squaredNorm()) * s.c;
}

Vector project_impl(const AffineSet& s, const Vector& v) {
  require_dim(v, s.A.cols());
  const Matrix& pinv = s.pinv ? *s.pinv : pseudo_inverse(s.A);
  return v - pinv * (s.A * v - s.B);
}

Vector project_impl(const Box& s, const Vector& v) { return truncate(v, s.lower, s.upper); }

Vector project_impl(const LpBall& s, const Vector& v) {
  require_dim(v, s.center.size());
  switch (s.p) {
    case 1:
      return project_l1_ball(v, s.center, s.radius);
    case 2:
      return project_l2_ball(v, s.center, s.radius);
    case kInfNorm: {
      const Vector r = Vector::Constant(v.size(), s.radius);
      return truncate(v, s.center - r, s.center + r);
    }
    default:
      fail(ErrorCode::UnsupportedNorm, "ball norm must be 1, 2 or infinity");
  }
}

Vector project_impl(const LpBallComplement& s, const Vector& v) {
  require_dim(v, s.center.size());
  const Vector d = v - s.center;
  if (s.p == 2) {
    const double nd = d.norm();
    if (nd >= s.radius) return v;
    if (nd == 0.0) {
      // Every boundary point is nearest; take the first axis.
      Vector x = s.center;
      x(0) += s.radius;
      return x;
    }
    return s.center + (s.radius / nd) * d;
  }
  if (s.p == 1) {
    const double gap = positive_part(s.radius - d.lpNorm<1>());
    if (gap == 0.0) return v;
    const double step = gap / static_cast<double>(v.size());
    Vector x = v;
    for (Eigen::Index i = 0; i < v.size(); ++i) x(i) += sign_nonneg(d(i)) * step;
    return x;
  }
  fail(ErrorCode::UnsupportedNorm, "ball complement norm must be 1 or 2");
}

Vector project_impl(const Simplex&, const Vector& v) {
  const double s = threshold_sum_root(v, 1.0);
  return (v.array() - s).cwiseMax(0.0).matrix();
}

Vector project_impl(const Polyhedron& s, const Vector& v) {
  require_dim(v, s.C.cols());
  DykstraConfig cfg;
  cfg.tol = 1e-13;
  cfg.max_cycles = 100000;
  return project_polyhedron(s.C, s.D, v, cfg).x;
}

}  // namespace

void validate(const ConvexSet& set) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Hyperplane>) {
          require_finite(s.a, "a");
          if (s.a.squaredNorm() == 0.0) fail(ErrorCode::DegenerateSet, "hyperplane normal is zero");
        } else if constexpr (std::is_same_v<T, Halfspace>) {
          require_finite(s.c, "c");
          if (s.c.squaredNorm() == 0.0) fail(ErrorCode::DegenerateSet, "half-space normal is zero");
        } else if constexpr (std::is_same_v<T, AffineSet>) {
          if (s.A.rows() != s.B.size()) fail(ErrorCode::DimensionMismatch, "affine set rows");
        } else if constexpr (std::is_same_v<T, Box>) {
          require_size(s.upper, s.lower.size(), "upper");
          if ((s.lower.array() > s.upper.array()).any()) fail(ErrorCode::InvertedBounds, "lower > upper");
        } else if constexpr (std::is_same_v<T, LpBall> || std::is_same_v<T, LpBallComplement>) {
          if (!(s.radius > 0.0)) fail(ErrorCode::DegenerateSet, "radius must be positive");
          if (s.center.size() == 0) fail(ErrorCode::DimensionMismatch, "empty center");
        } else if constexpr (std::is_same_v<T, Polyhedron>) {
          if (s.C.rows() != s.D.size()) fail(ErrorCode::DimensionMismatch, "polyhedron rows");
        }
      },
      set);
}

Vector project(const ConvexSet& set, const Vector& v) {
  validate(set);
  require_finite(v, "v");
  return std::visit([&](const auto& s) { return project_impl(s, v); }, set);
}

ProxFn projection(ConvexSet set) {
  validate(set);
  const char* names[] = {"hyperplane", "halfspace", "affine",   "box",
                         "ball",       "ball_complement", "simplex", "polyhedron"};
  std::string name = std::string("project_") + names[set.index()];
  return ProxFn(name, [s = std::move(set)](const Vector& v) {
    return std::visit([&](const auto& t) { return project_impl(t, v); }, s);
  });
}

Vector soft_threshold(const Vector& v, double lambda) {
  if (lambda < 0.0) fail(ErrorCode::NegativeLambda, "lambda must be >= 0");
  Vector x(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) x(i) = sign(v(i)) * positive_part(std::abs(v(i)) - lambda);
  return x;
}

Vector soft_threshold(const Vector& v, const Vector& lambda) {
  require_size(lambda, v.size(), "lambda");
  if ((lambda.array() < 0.0).any()) fail(ErrorCode::NegativeLambda, "lambda must be >= 0");
  Vector x(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) x(i) = sign(v(i)) * positive_part(std::abs(v(i)) - lambda(i));
  return x;
}

Vector soft_threshold_two_sided(const Vector& v, const Vector& lambda_minus, const Vector& lambda_plus) {
  require_size(lambda_minus, v.size(), "lambda_minus");
  require_size(lambda_plus, v.size(), "lambda_plus");
  if ((lambda_minus.array() < 0.0).any() || (lambda_plus.array() < 0.0).any()) {
    fail(ErrorCode::NegativeLambda, "thresholds must be >= 0");
  }
  Vector x(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    x(i) = positive_part(v(i) - lambda_plus(i)) - negative_part(v(i) + lambda_minus(i));
  }
  return x;
}

Vector truncate(const Vector& v, const Vector& lower, const Vector& upper) {
  require_size(lower, v.size(), "lower");
  require_size(upper, v.size(), "upper");
  if ((lower.array() > upper.array()).any()) fail(ErrorCode::InvertedBounds, "lower > upper");
  return v.cwiseMax(lower).cwiseMin(upper);
}

Vector prox_max(const Vector& v, double lambda) {
  if (!(lambda > 0.0)) fail(ErrorCode::NegativeLambda, "lambda must be > 0");
  const double s = threshold_sum_root(v, lambda);
  return v.cwiseMin(s);
}

Vector prox_lp_norm(int p, const Vector& v, double lambda) {
  if (!(lambda > 0.0)) fail(ErrorCode::NegativeLambda, "lambda must be > 0");
  switch (p) {
    case 1:
      return soft_threshold(v, lambda);
    case 2: {
      const double nv = v.norm();
      return (1.0 - lambda / std::max(lambda, nv)) * v;
    }
    case kInfNorm: {
      const Vector a = v.cwiseAbs();
      if (a.sum() <= lambda) return Vector::Zero(v.size());
      const double s = threshold_sum_root(a, lambda);
      Vector x(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) x(i) = sign(v(i)) * std::min(a(i), s);
      return x;
    }
    default:
      fail(ErrorCode::UnsupportedNorm, "norm must be 1, 2 or infinity");
  }
}

Vector prox_log_barrier(const Vector& v, double lambda, const Vector& b) {
  if (!(lambda > 0.0)) fail(ErrorCode::NegativeLambda, "lambda must be > 0");
  require_size(b, v.size(), "b");
  if ((b.array() <= 0.0).any()) fail(ErrorCode::NonPositiveWeight, "barrier weights must be > 0");
  Vector x(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double c = 4.0 * lambda * b(i);
    const double root = std::sqrt(v(i) * v(i) + c);
    // Rationalized branch avoids cancellation for large negative v.
    x(i) = v(i) >= 0.0 ? 0.5 * (v(i) + root) : 0.5 * c / (root - v(i));
  }
  return x;
}

Vector prox_quadratic(const Vector& v, const Matrix& Q, const Vector& R) {
  require_square(Q, "Q");
  require_size(v, Q.rows(), "v");
  require_size(R, Q.rows(), "R");
  return solve_spd(Q + Matrix::Identity(Q.rows(), Q.cols()), R + v);
}

Vector prox_kl(const Vector& v, double lambda, const Vector& ref) {
  if (!(lambda > 0.0)) fail(ErrorCode::NegativeLambda, "lambda must be > 0");
  require_size(ref, v.size(), "reference");
  if ((ref.array() <= 0.0).any()) fail(ErrorCode::NonPositiveWeight, "reference must be > 0");
  Vector x(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double t = std::log(ref(i) / lambda) + v(i) / lambda - 1.0 / ref(i);
    x(i) = lambda * lambert_w_exp(t);
  }
  return x;
}

Vector prox_bid_ask(const Vector& v, double lambda, const Vector& alpha, const Vector& beta,
                    const Vector& gamma) {
  if (!(lambda > 0.0)) fail(ErrorCode::NegativeLambda, "lambda must be > 0");
  require_size(alpha, v.size(), "alpha");
  require_size(beta, v.size(), "beta");
  require_size(gamma, v.size(), "gamma");
  if ((alpha.array() < 0.0).any() || (beta.array() < 0.0).any()) {
    fail(ErrorCode::NegativeCost, "costs must be >= 0");
  }
  return gamma + soft_threshold_two_sided(v - gamma, lambda * alpha, lambda * beta);
}

Vector prox_sum_k_largest(const Vector& v, double lambda, int k) {
  if (!(lambda > 0.0)) fail(ErrorCode::NegativeLambda, "lambda must be > 0");
  const auto n = v.size();
  if (k < 1 || k > n) fail(ErrorCode::BadK, "k must lie in 1..n");
  const Vector w = v / lambda;
  Vector p = Vector::Ones(n);
  if (k < n) {
    // Projection of w onto {0 <= p <= 1, sum p = k}: p = clip(w - s, 0, 1) for the
    // shift s found by bisection, then recomputed exactly on the free set.
    const double kk = static_cast<double>(k);
    auto excess = [&](double s) { return (w.array() - s).cwiseMax(0.0).cwiseMin(1.0).sum() - kk; };
    RootBracket br{w.minCoeff() - 1.0, w.maxCoeff(), 1e-15 * (1.0 + w.cwiseAbs().maxCoeff()), 200};
    double s = bisect(excess, br);
    double free_sum = 0.0, upper = 0.0;
    int free_count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = w(i) - s;
      if (t >= 1.0) {
        upper += 1.0;
      } else if (t > 0.0) {
        free_sum += w(i);
        ++free_count;
      }
    }
    if (free_count > 0) s = (free_sum + upper - kk) / free_count;
    p = (w.array() - s).cwiseMax(0.0).cwiseMin(1.0);
  }
  return v - lambda * p;
}

Vector prox_scale_translate(const ProxFn& base, double a, const Vector& b, const Vector& v) {
  if (a == 0.0) fail(ErrorCode::ZeroScale, "scale must be non-zero");
  require_size(b, v.size(), "b");
  return (base(a * v + b) - b) / a;
}

Vector prox_turnover(const Vector& v, const Vector& x0, double radius) {
  require_size(x0, v.size(), "x0");
  if (radius < 0.0) fail(ErrorCode::InvalidArgument, "turnover cap must be >= 0");
  if (radius == 0.0) return x0;
  return project_l1_ball(v, x0, radius);
}

namespace prox {

ProxFn zero() {
  return ProxFn("identity", [](const Vector& v) { return v; });
}

ProxFn l1(double lambda) {
  if (lambda < 0.0) fail(ErrorCode::NegativeLambda, "lambda must be >= 0");
  return ProxFn("l1", [lambda](const Vector& v) { return soft_threshold(v, lambda); });
}

ProxFn l1_weighted(const Vector& lambda, const Vector& center) {
  require_size(center, lambda.size(), "center");
  if ((lambda.array() < 0.0).any()) fail(ErrorCode::NegativeLambda, "lambda must be >= 0");
  return ProxFn("l1_weighted", [lambda, center](const Vector& v) {
    return Vector(center + soft_threshold(v - center, lambda));
  });
}

ProxFn lp_norm(int p, double lambda) {
  if (p != 1 && p != 2 && p != kInfNorm) fail(ErrorCode::UnsupportedNorm, "norm must be 1, 2 or infinity");
  if (!(lambda > 0.0)) fail(ErrorCode::NegativeLambda, "lambda must be > 0");
  return ProxFn("lp_norm", [p, lambda](const Vector& v) { return prox_lp_norm(p, v, lambda); });
}

ProxFn max(double lambda) {
  if (!(lambda > 0.0)) fail(ErrorCode::NegativeLambda, "lambda must be > 0");
  return ProxFn("max", [lambda](const Vector& v) { return prox_max(v, lambda); });
}

ProxFn log_barrier(double lambda, Vector b) {
  if (!(lambda > 0.0)) fail(ErrorCode::NegativeLambda, "lambda must be > 0");
  if ((b.array() <= 0.0).any()) fail(ErrorCode::NonPositiveWeight, "barrier weights must be > 0");
  return ProxFn("log_barrier", [lambda, b = std::move(b)](const Vector& v) { return prox_log_barrier(v, lambda, b); });
}

ProxFn quadratic(const Matrix& Q, Vector R) {
  require_square(Q, "Q");
  require_size(R, Q.rows(), "R");
  auto factor = std::make_shared<const SpdFactor>(Q + Matrix::Identity(Q.rows(), Q.cols()));
  return ProxFn("quadratic", [factor, R = std::move(R)](const Vector& v) { return factor->solve(Vector(R + v)); });
}

ProxFn kl(double lambda, Vector ref) {
  if (!(lambda > 0.0)) fail(ErrorCode::NegativeLambda, "lambda must be > 0");
  if ((ref.array() <= 0.0).any()) fail(ErrorCode::NonPositiveWeight, "reference must be > 0");
  return ProxFn("kl", [lambda, ref = std::move(ref)](const Vector& v) { return prox_kl(v, lambda, ref); });
}

ProxFn bid_ask(double lambda, Vector alpha, Vector beta, Vector gamma) {
  if (!(lambda > 0.0)) fail(ErrorCode::NegativeLambda, "lambda must be > 0");
  if ((alpha.array() < 0.0).any() || (beta.array() < 0.0).any()) fail(ErrorCode::NegativeCost, "costs must be >= 0");
  return ProxFn("bid_ask", [=](const Vector& v) { return prox_bid_ask(v, lambda, alpha, beta, gamma); });
}

ProxFn sum_k_largest(double lambda, int k) {
  if (!(lambda > 0.0)) fail(ErrorCode::NegativeLambda, "lambda must be > 0");
  if (k < 1) fail(ErrorCode::BadK, "k must be >= 1");
  return ProxFn("sum_k_largest", [lambda, k](const Vector& v) { return prox_sum_k_largest(v, lambda, k); });
}

ProxFn scale_translate(ProxFn base, double a, Vector b) {
  if (a == 0.0) fail(ErrorCode::ZeroScale, "scale must be non-zero");
  return ProxFn("scale_translate", [base = std::move(base), a, b = std::move(b)](const Vector& v) {
    return prox_scale_translate(base, a, b, v);
  });
}

}  // namespace prox

}  // namespace lsopt
