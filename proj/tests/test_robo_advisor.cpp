#include "doctest.h"
#include "test_util.hpp"

#include "lsopt/data_fixtures.hpp"
#include "lsopt/risk_models.hpp"
#include "lsopt/robo_advisor.hpp"

#include <cmath>

using namespace lsopt;
using testutil::max_abs;
using testutil::random_vector;

namespace {

AssetUniverse universe() {
  const AssetUniverse u = parameter_set_1().universe;
  return u.with_expected_returns(0.5 * u.sigma);
}

Vector random_simplex(std::mt19937_64& rng, Eigen::Index n) {
  const Vector v = random_vector(rng, n, 0.05, 1.0);
  return v / v.sum();
}

RoboConfig random_config(std::mt19937_64& rng, int t) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index n = 8;
  RoboConfig cfg;
  cfg.benchmark = random_simplex(rng, n);
  cfg.reference = random_simplex(rng, n);
  cfg.current = random_simplex(rng, n);
  cfg.gamma = 0.2 * unit(rng);
  cfg.rho1 = 0.02 * unit(rng);
  cfg.rho2 = 0.1 * unit(rng);
  cfg.rho1_ref = 0.02 * unit(rng);
  cfg.rho2_ref = 0.1 * unit(rng);
  cfg.gamma1 = random_vector(rng, n, 0.5, 1.5);
  cfg.gamma2 = Matrix(random_vector(rng, n, 0.5, 1.5).asDiagonal());
  if (t % 2 == 1) {
    cfg.lambda = 0.01 * unit(rng);
    cfg.budgets = random_simplex(rng, n);
  }
  if (t % 4 == 2) {
    // At most 40% in the first three assets.
    Matrix C = Matrix::Zero(1, n);
    C.leftCols(3).setOnes();
    cfg.C = C;
    cfg.D = Vector::Constant(1, 0.4);
  }
  if (t % 5 == 3) cfg.nonlinear.push_back(projection(LpBall{2, Vector::Constant(n, 0.125), 0.25}));
  return cfg;
}

}  // namespace

TEST_CASE("robo quadratic data") {
  const AssetUniverse u = universe();
  std::mt19937_64 rng(1);
  const RoboConfig cfg = random_config(rng, 0);
  const auto [Q, R] = robo_quadratic(u, cfg);
  RoboConfig smooth = cfg;
  smooth.rho1 = smooth.rho1_ref = 0.0;
  // The smooth part minus its quadratic model is a constant.
  const Vector x1 = random_simplex(rng, 8);
  const Vector x2 = random_simplex(rng, 8);
  const double d1 = robo_objective(x1, u, smooth) - (0.5 * x1.dot(Q * x1) - x1.dot(R));
  const double d2 = robo_objective(x2, u, smooth) - (0.5 * x2.dot(Q * x2) - x2.dot(R));
  CHECK(std::abs(d1 - d2) <= 1e-12);
}

TEST_CASE("robo formulations agree on random configs") {
  const AssetUniverse u = universe();
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    CAPTURE(t);
    RoboConfig cfg = random_config(rng, t);
    cfg.formulation = RoboFormulation::AdmmQp;
    const RoboResult a = robo_advisor(u, cfg);
    cfg.formulation = RoboFormulation::AdmmCcd;
    const RoboResult b = robo_advisor(u, cfg);
    CHECK(max_abs(a.weights.w - b.weights.w) <= 1e-4);
    CHECK(std::abs(b.weights.w.sum() - 1.0) <= 1e-8);
    CHECK(b.weights.w.minCoeff() >= 0.0);
    if (cfg.C) CHECK((*cfg.C * b.weights.w - *cfg.D).maxCoeff() <= 1e-6);

    // No feasible perturbation along the simplex does better.
    const double best = robo_objective(b.weights.w, u, cfg);
    for (int k = 0; k < 50; ++k) {
      const Vector d = random_vector(rng, 8, -1e-3, 1e-3);
      const Vector z = b.weights.w + Vector(d.array() - d.mean());
      if (z.minCoeff() <= 0.0) continue;
      if (cfg.C && (*cfg.C * z - *cfg.D).maxCoeff() > 0.0) continue;
      if (!cfg.nonlinear.empty() && (z - Vector::Constant(8, 0.125)).norm() > 0.25) continue;
      CHECK(best <= robo_objective(z, u, cfg) + 1e-9);
    }
  }
}

TEST_CASE("robo reduces to mean-variance") {
  const AssetUniverse u = universe();
  for (double gamma : {0.0, 0.05, 0.5}) {
    RoboConfig cfg;
    cfg.gamma = gamma;
    const PortfolioWeights ref = mvo_gamma(u, gamma, PortfolioConstraints::long_only_budget());
    for (RoboFormulation f : {RoboFormulation::AdmmQp, RoboFormulation::AdmmCcd}) {
      cfg.formulation = f;
      CHECK(max_abs(robo_advisor(u, cfg).weights.w - ref.w) <= 1e-6);
    }
  }
}

TEST_CASE("robo reduces to ERC") {
  const AssetUniverse u = universe();
  const Vector w = erc(u).weights.w;
  // Unscaled barrier solution at lambda = 1; rescaling lambda makes it sum to one.
  RbConfig rc;
  rc.lambda = 1.0;
  const RiskResult unit = erc(u, RbEngine::Ccd, rc);
  const double s = unit.unscaled.sum();
  RoboConfig cfg;
  cfg.lambda = 1.0 / (s * s);
  for (RoboFormulation f : {RoboFormulation::AdmmQp, RoboFormulation::AdmmCcd}) {
    cfg.formulation = f;
    CHECK(max_abs(robo_advisor(u, cfg).weights.w - w) <= 1e-5);
  }
}

TEST_CASE("dominant l1 penalty freezes the current portfolio") {
  const AssetUniverse u = universe();
  std::mt19937_64 rng(3);
  RoboConfig cfg;
  cfg.gamma = 0.3;
  cfg.current = random_simplex(rng, 8);
  cfg.rho1 = 10.0;
  for (RoboFormulation f : {RoboFormulation::AdmmQp, RoboFormulation::AdmmCcd}) {
    cfg.formulation = f;
    CHECK(max_abs(robo_advisor(u, cfg).weights.w - cfg.current) <= 1e-8);
  }
}

TEST_CASE("cross-checked robo run") {
  const AssetUniverse u = universe();
  std::mt19937_64 rng(11);
  const RoboConfig cfg = random_config(rng, 1);
  CHECK_NOTHROW(robo_advisor_checked(u, cfg));

  RoboConfig bad;
  bad.gamma = -1.0;
  CHECK_THROWS_AS(robo_advisor(u, bad), Error);
  RoboConfig dims;
  dims.current = Vector::Ones(3);
  CHECK_THROWS_AS(robo_advisor(u, dims), Error);
}
