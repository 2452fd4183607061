#include "lsopt/data_fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace lsopt {

namespace {

Matrix corr_set_1() {
  Matrix l(8, 8);
  l << 100, 0, 0, 0, 0, 0, 0, 0,
       80, 100, 0, 0, 0, 0, 0, 0,
       70, 75, 100, 0, 0, 0, 0, 0,
       60, 65, 90, 100, 0, 0, 0, 0,
       70, 50, 70, 85, 100, 0, 0, 0,
       50, 60, 70, 80, 60, 100, 0, 0,
       70, 50, 70, 75, 80, 50, 100, 0,
       60, 65, 70, 75, 65, 70, 80, 100;
  return symmetric_from_lower(l / 100.0);
}

Matrix corr_set_2() {
  Matrix rho = Matrix::Constant(8, 8, 0.60);
  rho.diagonal().setOnes();
  rho(1, 0) = rho(0, 1) = 0.20;
  rho(2, 0) = rho(0, 2) = 0.55;
  return rho;
}

ParameterSet set_2_with(double last_vol) {
  Vector sigma(8);
  sigma << 0.25, 0.20, 0.15, 0.18, 0.30, 0.20, 0.15, last_vol;
  return ParameterSet{AssetUniverse::from_vol_corr(sigma, corr_set_2()), std::nullopt};
}

}  // namespace

ParameterSet parameter_set_1() {
  Vector sigma(8);
  sigma << 0.21, 0.20, 0.40, 0.18, 0.35, 0.23, 0.07, 0.29;
  Vector b(8);
  b << 0.23, 0.19, 0.17, 0.13, 0.09, 0.08, 0.06, 0.05;
  return ParameterSet{AssetUniverse::from_vol_corr(sigma, corr_set_1()), b};
}

ParameterSet parameter_set_2() { return set_2_with(0.25); }

ParameterSet parameter_set_2_as_printed() { return set_2_with(0.35); }

LassoData lasso_synthetic(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  if (p < 4 || n <= p) fail(ErrorCode::BadDims, "need n > p >= 4");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::normal_distribution<double> noise(0.0, kLassoNoiseSd);

  LassoData d;
  d.beta.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) d.beta(j) = coef(rng);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  for (int k = 0; k < 4; ++k) {
    d.beta(idx[static_cast<std::size_t>(k)]) = (unit(rng) < 0.5 ? -1.0 : 1.0) * kLassoLargeBeta;
  }

  d.X.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) d.X(i, j) = unit(rng);
  }
  d.Y = d.X * d.beta;
  for (Eigen::Index i = 0; i < n; ++i) d.Y(i) += noise(rng);

  auto standardize = [n](auto&& col) {
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n));
    col /= sd;
  };
  for (Eigen::Index j = 0; j < p; ++j) standardize(d.X.col(j));
  standardize(d.Y);
  return d;
}

BoxQpExample box_qp_example() {
  BoxQpExample e;
  e.Q.resize(5, 5);
  e.Q << 5.76, 5.11, 3.47, 5.13, 6.82,
         5.11, 7.98, 5.38, 4.30, 8.70,
         3.47, 5.38, 4.01, 2.83, 5.91,
         5.13, 4.30, 2.83, 4.70, 5.84,
         6.82, 8.70, 5.91, 5.84, 10.18;
  e.R.resize(5);
  e.R << 0.65, 0.72, 0.46, 0.59, 1.26;
  return e;
}

}  // namespace lsopt
