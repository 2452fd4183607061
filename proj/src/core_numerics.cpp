#include "lsopt/core_numerics.hpp"
#include "lsopt/solver_report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lsopt {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NoSignChange: return "NoSignChange";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::NegativeLambda: return "NegativeLambda";
    case ErrorCode::InvertedBounds: return "InvertedBounds";
    case ErrorCode::DegenerateSet: return "DegenerateSet";
    case ErrorCode::UnsupportedNorm: return "UnsupportedNorm";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::NegativeCost: return "NegativeCost";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::ZeroScale: return "ZeroScale";
    case ErrorCode::EmptySetSuspected: return "EmptySetSuspected";
    case ErrorCode::ZeroColumn: return "ZeroColumn";
    case ErrorCode::NonPositiveDiagonal: return "NonPositiveDiagonal";
    case ErrorCode::NonPositiveStart: return "NonPositiveStart";
    case ErrorCode::NonPositiveVariance: return "NonPositiveVariance";
    case ErrorCode::InfeasibleSuspected: return "InfeasibleSuspected";
    case ErrorCode::TargetUnreachable: return "TargetUnreachable";
    case ErrorCode::UnreachableDiversification: return "UnreachableDiversification";
    case ErrorCode::InfeasibleTargets: return "InfeasibleTargets";
    case ErrorCode::IndefiniteUnhandled: return "IndefiniteUnhandled";
    case ErrorCode::FormulationDisagreement: return "FormulationDisagreement";
    case ErrorCode::BadDims: return "BadDims";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

bool Error::is_domain() const noexcept {
  switch (code_) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::BadDims:
    case ErrorCode::NonFinite:
      return false;
    default:
      return true;
  }
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

void require_finite(const Vector& v, const char* name) {
  if (!v.allFinite()) fail(ErrorCode::NonFinite, std::string(name) + " has non-finite entries");
}

void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) fail(ErrorCode::NonFinite, std::string(name) + " has non-finite entries");
}

void require_size(const Vector& v, Eigen::Index n, const char* name) {
  if (v.size() != n) {
    fail(ErrorCode::DimensionMismatch,
         std::string(name) + " has length " + std::to_string(v.size()) + ", expected " +
             std::to_string(n));
  }
}

void require_square(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) fail(ErrorCode::DimensionMismatch, std::string(name) + " is not square");
}

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return m.rows() == 0 || (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

Matrix cholesky_lower(const Matrix& m) {
  require_square(m, "matrix");
  require_finite(m, "matrix");
  const Eigen::Index n = m.rows();
  Matrix l = Matrix::Zero(n, n);
  if (n == 0) return l;
  const double scale = m.diagonal().maxCoeff();
  if (!(scale > 0.0)) fail(ErrorCode::NotPositiveDefinite, "non-positive diagonal");
  const double floor = 1e-14 * scale;
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = m(j, j) - l.row(j).head(j).squaredNorm();
    if (d <= floor) {
      fail(ErrorCode::NotPositiveDefinite, "pivot " + std::to_string(j) + " too small");
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return l;
}

SpdFactor::SpdFactor(const Matrix& m) : l_(cholesky_lower(m)) {}

Vector SpdFactor::solve(const Vector& b) const {
  require_size(b, l_.rows(), "rhs");
  Vector y = l_.triangularView<Eigen::Lower>().solve(b);
  return l_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix SpdFactor::solve_many(const Matrix& b) const {
  if (b.rows() != l_.rows()) fail(ErrorCode::DimensionMismatch, "rhs rows");
  Matrix y = l_.triangularView<Eigen::Lower>().solve(b);
  return l_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Vector solve_spd(const Matrix& m, const Vector& b) { return SpdFactor(m).solve(b); }

Matrix pseudo_inverse(const Matrix& a) {
  require_finite(a, "matrix");
  if (a.size() == 0) return Matrix(a.cols(), a.rows());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = std::numeric_limits<double>::epsilon() *
                        static_cast<double>(std::max(a.rows(), a.cols())) *
                        (s.size() > 0 ? s(0) : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double bisect(const std::function<double(double)>& f, const RootBracket& bracket) {
  if (!(bracket.lo < bracket.hi) || !(bracket.tol > 0.0)) {
    fail(ErrorCode::InvalidArgument, "bracket needs lo < hi and tol > 0");
  }
  double lo = bracket.lo;
  double hi = bracket.hi;
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0) fail(ErrorCode::NoSignChange, "f(lo) and f(hi) share a sign");
  for (int it = 0; it < bracket.max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm) <= bracket.tol || 0.5 * (hi - lo) <= bracket.tol) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  fail(ErrorCode::MaxIterExceeded, "bisection did not reach tolerance");
}

namespace {

constexpr double kInvE = 0.36787944117144233;

double halley_w(double x, double w) {
  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double step = f / denom;
    w -= step;
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(w))) {
      break;
    }
  }
  return w;
}

}  // namespace

double lambert_w(double x) {
  if (std::isnan(x) || x < -kInvE) fail(ErrorCode::OutOfDomain, "lambert_w needs x >= -1/e");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;
  const double p2 = 2.0 * (std::exp(1.0) * x + 1.0);
  if (p2 <= 0.0) return -1.0;
  double w0;
  if (x >= 0.0) {
    w0 = std::log1p(x);
  } else if (x < -0.25) {
    const double p = std::sqrt(p2);
    w0 = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else {
    w0 = x * (1.0 - x);
  }
  return halley_w(x, w0);
}

double lambert_w_exp(double t) {
  if (std::isnan(t)) fail(ErrorCode::OutOfDomain, "lambert_w_exp of NaN");
  if (t < 700.0) return lambert_w(std::exp(t));
  // Newton on w + ln w = t.
  double w = t - std::log(t);
  for (int it = 0; it < 50; ++it) {
    const double g = w + std::log(w) - t;
    const double step = g / (1.0 + 1.0 / w);
    w -= step;
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * w) break;
  }
  return w;
}

double threshold_sum_root(const Vector& v, double target) {
  if (v.size() == 0) fail(ErrorCode::DimensionMismatch, "empty vector");
  if (!(target > 0.0)) fail(ErrorCode::InvalidArgument, "target must be positive");
  require_finite(v, "v");
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<double>());
  // On the segment where the k largest entries are active, the sum is
  // cum_k - k s; pick the largest k whose root still exceeds u_(k+1).
  double cum = 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double cand = (cum - target) / static_cast<double>(k + 1);
    if (k + 1 == u.size() || cand >= u[k + 1]) {
      s = cand;
      break;
    }
  }
  return s;
}

const char* to_string(SolverStatus s) {
  return s == SolverStatus::Converged ? "Converged" : "MaxIter";
}

const Vector& Solution::value() const {
  if (!report.converged()) {
    fail(ErrorCode::MaxIterExceeded,
         "no convergence after " + std::to_string(report.iterations) + " iterations");
  }
  return x;
}

double positive_part(double a) { return a > 0.0 ? a : 0.0; }
double negative_part(double a) { return a < 0.0 ? -a : 0.0; }

}  // namespace lsopt
