#include "lsopt/universe.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace lsopt {

double min_eigenvalue(const Matrix& symmetric) {
  require_square(symmetric, "matrix");
  if (symmetric.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix symmetric_from_lower(const Matrix& lower) {
  require_square(lower, "matrix");
  Matrix m = lower.triangularView<Eigen::Lower>();
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose().triangularView<Eigen::StrictlyUpper>();
  return m;
}

AssetUniverse AssetUniverse::from_vol_corr(Vector sigma, Matrix rho, Vector mu, double rf,
                                           std::vector<std::string> names) {
  const auto n = sigma.size();
  if (n == 0) fail(ErrorCode::BadDims, "empty universe");
  require_finite(sigma, "sigma");
  require_finite(rho, "rho");
  if (rho.rows() != n || rho.cols() != n) fail(ErrorCode::DimensionMismatch, "rho must be n x n");
  if ((sigma.array() <= 0.0).any()) fail(ErrorCode::NonPositiveVariance, "volatilities must be > 0");
  if (!is_symmetric(rho)) fail(ErrorCode::InvalidArgument, "rho must be symmetric");
  if ((rho.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12) fail(ErrorCode::InvalidArgument, "rho diagonal must be 1");
  if (rho.cwiseAbs().maxCoeff() > 1.0 + 1e-12) fail(ErrorCode::InvalidArgument, "correlations must lie in [-1, 1]");
  if (mu.size() == 0) mu = Vector::Zero(n);
  require_size(mu, n, "mu");
  require_finite(mu, "mu");
  AssetUniverse u;
  u.cov = sigma.asDiagonal() * rho * sigma.asDiagonal();
  u.cov = 0.5 * (u.cov + u.cov.transpose());
  if (min_eigenvalue(u.cov) < -1e-10) fail(ErrorCode::NotPositiveDefinite, "covariance is not PSD");
  if (names.empty()) {
    for (Eigen::Index i = 0; i < n; ++i) names.push_back("asset" + std::to_string(i + 1));
  }
  if (static_cast<Eigen::Index>(names.size()) != n) fail(ErrorCode::DimensionMismatch, "names");
  u.names = std::move(names);
  u.mu = std::move(mu);
  u.sigma = std::move(sigma);
  u.rho = std::move(rho);
  u.rf = rf;
  return u;
}

AssetUniverse AssetUniverse::from_covariance(const Matrix& cov, Vector mu, double rf,
                                             std::vector<std::string> names) {
  require_square(cov, "covariance");
  if (!is_symmetric(cov, 1e-12 * (1.0 + cov.cwiseAbs().maxCoeff()))) {
    fail(ErrorCode::InvalidArgument, "covariance must be symmetric");
  }
  if ((cov.diagonal().array() <= 0.0).any()) fail(ErrorCode::NonPositiveVariance, "variances must be > 0");
  const Vector sigma = cov.diagonal().cwiseSqrt();
  const Vector inv = sigma.cwiseInverse();
  Matrix rho = inv.asDiagonal() * cov * inv.asDiagonal();
  rho = 0.5 * (rho + rho.transpose());
  rho.diagonal().setOnes();
  AssetUniverse u = from_vol_corr(sigma, rho, std::move(mu), rf, std::move(names));
  u.cov = 0.5 * (cov + cov.transpose());
  return u;
}

AssetUniverse AssetUniverse::with_expected_returns(Vector mu_new) const {
  require_size(mu_new, size(), "mu");
  AssetUniverse u = *this;
  u.mu = std::move(mu_new);
  return u;
}

AssetUniverse AssetUniverse::scaled(double c) const {
  if (!(c > 0.0)) fail(ErrorCode::InvalidArgument, "scale must be > 0");
  AssetUniverse u = *this;
  u.cov *= c;
  u.sigma *= std::sqrt(c);
  return u;
}

}  // namespace lsopt
