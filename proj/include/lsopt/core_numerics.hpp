#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace lsopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFinite,
  NotPositiveDefinite,
  NoSignChange,
  MaxIterExceeded,
  OutOfDomain,
  NegativeLambda,
  InvertedBounds,
  DegenerateSet,
  UnsupportedNorm,
  NonPositiveWeight,
  NegativeCost,
  BadK,
  ZeroScale,
  EmptySetSuspected,
  ZeroColumn,
  NonPositiveDiagonal,
  NonPositiveStart,
  NonPositiveVariance,
  InfeasibleSuspected,
  TargetUnreachable,
  UnreachableDiversification,
  InfeasibleTargets,
  IndefiniteUnhandled,
  FormulationDisagreement,
  BadDims,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

  // Domain errors (bad math input) as opposed to malformed requests.
  bool is_domain() const noexcept;

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

void require_finite(const Vector& v, const char* name);
void require_finite(const Matrix& m, const char* name);
void require_size(const Vector& v, Eigen::Index n, const char* name);
void require_square(const Matrix& m, const char* name);

bool is_symmetric(const Matrix& m, double tol = 1e-12);

// Dense Cholesky factor with the pivot rule pivot <= 1e-14 * max(diag) -> error.
Matrix cholesky_lower(const Matrix& m);

// Holds L (M = L L^T) and solves against it.
class SpdFactor {
 public:
  SpdFactor() = default;
  explicit SpdFactor(const Matrix& m);

  Vector solve(const Vector& b) const;
  Matrix solve_many(const Matrix& b) const;
  const Matrix& lower() const { return l_; }
  Eigen::Index size() const { return l_.rows(); }

 private:
  Matrix l_;
};

Vector solve_spd(const Matrix& m, const Vector& b);

Matrix pseudo_inverse(const Matrix& a);

struct RootBracket {
  double lo = 0.0;
  double hi = 1.0;
  double tol = 1e-10;
  int max_iter = 200;
};

double bisect(const std::function<double(double)>& f, const RootBracket& bracket);

// Principal branch, x >= -1/e.
double lambert_w(double x);

// W(exp(t)) without forming exp(t); usable for t far beyond the double range.
double lambert_w_exp(double t);

// s* solving sum_i (v_i - s*)_+ = target, target > 0.
double threshold_sum_root(const Vector& v, double target);

double positive_part(double a);
double negative_part(double a);

}  // namespace lsopt
