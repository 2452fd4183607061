#pragma once

#include "lsopt/core_numerics.hpp"

#include <string>
#include <vector>

namespace lsopt {

struct AssetUniverse {
  std::vector<std::string> names;
  Vector mu;
  Vector sigma;
  Matrix rho;
  Matrix cov;
  double rf = 0.0;

  Eigen::Index size() const { return sigma.size(); }

  // Validates rho (symmetric, unit diagonal, entries in [-1, 1]) and builds
  // cov = diag(sigma) rho diag(sigma). An empty mu means zero expected returns.
  static AssetUniverse from_vol_corr(Vector sigma, Matrix rho, Vector mu = {}, double rf = 0.0,
                                     std::vector<std::string> names = {});
  static AssetUniverse from_covariance(const Matrix& cov, Vector mu = {}, double rf = 0.0,
                                       std::vector<std::string> names = {});

  AssetUniverse with_expected_returns(Vector mu_new) const;
  AssetUniverse scaled(double c) const;
};

double min_eigenvalue(const Matrix& symmetric);

// Lower triangle (including the diagonal) mirrored into a full symmetric matrix.
Matrix symmetric_from_lower(const Matrix& lower);

}  // namespace lsopt
