#include "doctest.h"
#include "test_util.hpp"

#include "lsopt/data_fixtures.hpp"
#include "lsopt/portfolio_models.hpp"

#include <array>
#include <chrono>
#include <cmath>

using namespace lsopt;
using testutil::max_abs;
using testutil::random_vector;

namespace {

Vector pct(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x(i++) = e / 100.0;
  return x;
}

Vector ew(Eigen::Index n) { return Vector::Constant(n, 1.0 / static_cast<double>(n)); }

AssetUniverse set1_with_returns() {
  const AssetUniverse u = parameter_set_1().universe;
  return u.with_expected_returns(0.5 * u.sigma);
}

bool budget_ok(const Vector& w, double tol) { return std::abs(w.sum() - 1.0) <= tol; }

}  // namespace

TEST_CASE("normalize_weights gate") {
  Vector w(3);
  w << 0.5, 0.5 + 1e-9, -1e-9;
  const PortfolioWeights p = normalize_weights(w, true);
  CHECK(p.w.minCoeff() >= 0.0);
  CHECK(std::abs(p.w.sum() - 1.0) <= 1e-15);
  w << 0.5, 0.6, -0.1;
  CHECK_THROWS_AS(normalize_weights(w, true), Error);
  w << 0.5, 0.6, 0.1;
  CHECK_THROWS_AS(normalize_weights(w, false), Error);
  CHECK_NOTHROW(normalize_weights(w, false, false));
}

TEST_CASE("mvo_gamma closed forms and the long-only corner") {
  const AssetUniverse u = parameter_set_1().universe;
  const Vector inv1 = solve_spd(u.cov, Vector::Ones(8));
  CHECK(max_abs(mvo_gamma(u, 0.0).w - inv1 / inv1.sum()) <= 1e-9);

  const AssetUniverse id = AssetUniverse::from_covariance(Matrix::Identity(5, 5));
  CHECK(max_abs(mvo_gamma(id, 0.0).w - ew(5)) <= 1e-12);

  const PortfolioWeights lo = mvo_gamma(u, 0.0, PortfolioConstraints::long_only_budget());
  Vector e7 = Vector::Zero(8);
  e7(6) = 1.0;
  CHECK(max_abs(lo.w - e7) <= 1e-8);
  CHECK_THROWS_AS(mvo_gamma(u, -1.0), Error);
}

TEST_CASE("mvo_target hits return and volatility targets") {
  const AssetUniverse u = set1_with_returns();
  const PortfolioConstraints c = PortfolioConstraints::long_only_budget();
  const PortfolioWeights gmv = mvo_gamma(u, 0.0, c);
  const TargetedPortfolio at_gmv = mvo_target(u, VolatilityTarget{portfolio_volatility(gmv.w, u.cov)}, c);
  CHECK(at_gmv.gamma == 0.0);
  CHECK(max_abs(at_gmv.weights.w - gmv.w) <= 1e-12);
  CHECK(mvo_target(u, ReturnTarget{gmv.w.dot(u.mu)}, c).gamma == 0.0);

  const TargetedPortfolio t = mvo_target(u, VolatilityTarget{0.15}, c);
  CHECK(std::abs(portfolio_volatility(t.weights.w, u.cov) - 0.15) <= 1e-6);
  const TargetedPortfolio r = mvo_target(u, ReturnTarget{0.12}, c);
  CHECK(std::abs(r.weights.w.dot(u.mu) - 0.12) <= 1e-6);

  try {
    mvo_target(u, ReturnTarget{0.5}, c);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TargetUnreachable);
  }
  try {
    mvo_target(u, VolatilityTarget{0.01}, c);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TargetUnreachable);
  }
}

TEST_CASE("mvo_benchmark") {
  const ParameterSet s = parameter_set_1();
  const Vector b = *s.benchmark;
  CHECK(max_abs(mvo_benchmark(s.universe, b, 0.0).w - b) <= 1e-9);

  // Objective expansion: 1/2 (x-b)'S(x-b) - g (x-b)'mu = 1/2 x'Sx - x'(g mu + S b) + const.
  const AssetUniverse u = set1_with_returns();
  const double g = 0.3;
  std::mt19937_64 rng(1);
  const double cst = 0.5 * b.dot(u.cov * b) + g * b.dot(u.mu);
  for (int t = 0; t < 100; ++t) {
    const Vector x = random_vector(rng, 8);
    const Vector d = x - b;
    const double lhs = 0.5 * d.dot(u.cov * d) - g * d.dot(u.mu);
    const double rhs = 0.5 * x.dot(u.cov * x) - x.dot(g * u.mu + u.cov * b) + cst;
    CHECK(std::abs(lhs - rhs) <= 1e-12);
  }

  // Large gamma: the long-only tilt ends in the best-return asset.
  const PortfolioWeights big = mvo_benchmark(u, b, 1e4, PortfolioConstraints::long_only_budget());
  Eigen::Index best = 0;
  u.mu.maxCoeff(&best);
  CHECK(big.w(best) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("index_sampling") {
  const ParameterSet s = parameter_set_1();
  const Vector b = *s.benchmark;
  const SamplingResult full = index_sampling(s.universe, b, 8);
  CHECK(max_abs(full.weights.w - b) <= 1e-7);
  CHECK(full.tracking_error <= 1e-6);

  // n_x = 1 against every single-asset portfolio.
  const SamplingResult one = index_sampling(s.universe, b, 1);
  CHECK((one.weights.w.array() > 0.0).count() == 1);
  double best_te = 1e9;
  for (Eigen::Index i = 0; i < 8; ++i) {
    Vector e = Vector::Zero(8);
    e(i) = 1.0;
    best_te = std::min(best_te, tracking_error(e, b, s.universe.cov));
  }
  CHECK(one.tracking_error == doctest::Approx(best_te).epsilon(1e-9));

  const SamplingResult four = index_sampling(s.universe, b, 4);
  CHECK((four.weights.w.array() > 0.0).count() == 4);
  CHECK(budget_ok(four.weights.w, 1e-12));
  CHECK(four.removed.size() == 4);
  const SamplingResult again = index_sampling(s.universe, b, 4);
  CHECK(again.removed == four.removed);
  CHECK(max_abs(again.weights.w - four.weights.w) == 0.0);
}

TEST_CASE("mvo_turnover") {
  const AssetUniverse u = parameter_set_1().universe;
  const Vector xb = ew(8);
  const RebalanceResult frozen = mvo_turnover(u, 0.0, xb, 0.0);
  CHECK(max_abs(frozen.weights.w - xb) <= 1e-7);

  const PortfolioWeights free = mvo_gamma(u, 0.0, PortfolioConstraints::long_only_budget());
  CHECK(max_abs(mvo_turnover(u, 0.0, xb, 2.0).weights.w - free.w) <= 1e-6);

  const RebalanceResult r = mvo_turnover(u, 0.0, xb, 0.5);
  CHECK(turnover(r.weights.w, xb) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.buy.cwiseProduct(r.sell).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(max_abs(r.buy - r.sell - (r.weights.w - xb)) <= 1e-15);

  // Same problem through the projection of random turnover-feasible points.
  const double f = 0.5 * r.weights.w.dot(u.cov * r.weights.w);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 500; ++t) {
    Vector w = random_vector(rng, 8, 0.0, 1.0);
    w /= w.sum();
    if (turnover(w, xb) > 0.5) continue;
    CHECK(f <= 0.5 * w.dot(u.cov * w) + 1e-9);
  }
}

TEST_CASE("mvo_costs") {
  const AssetUniverse u = set1_with_returns();
  const Vector xb = ew(8);
  const Vector zero = Vector::Zero(8);
  const RebalanceResult plain = mvo_costs(u, 0.1, xb, zero, zero);
  CHECK(max_abs(plain.weights.w - mvo_gamma(u, 0.1, PortfolioConstraints::long_only_budget()).w) <= 1e-6);

  const Vector big = Vector::Constant(8, 1e3);
  CHECK(max_abs(mvo_costs(u, 0.1, xb, big, big).weights.w - xb) <= 1e-6);

  const Vector c = Vector::Constant(8, 0.005);
  const RebalanceResult r = mvo_costs(u, 0.1, xb, c, c);
  const Vector& x = r.weights.w;
  CHECK(std::abs(x.sum() + c.dot(r.sell) + c.dot(r.buy) - 1.0) <= 1e-8);
  auto objective = [&](const Vector& w, const Vector& buy, const Vector& sell) {
    return 0.5 * w.dot(u.cov * w) - 0.1 * w.dot(u.mu) + c.dot(buy) + c.dot(sell);
  };
  CHECK(objective(x, r.buy, r.sell) <= objective(xb, zero, zero) + 1e-12);
  CHECK_THROWS_AS(mvo_costs(u, 0.1, xb, -c, c), Error);
}

TEST_CASE("gmv_herfindahl reproduces the minimum variance grid") {
  const AssetUniverse u = parameter_set_1().universe;
  const Vector up = Vector::Ones(8);
  const auto t0 = std::chrono::steady_clock::now();
  const HerfindahlResult five = gmv_herfindahl(u, up, 5.0);
  CHECK(max_abs(five.weights.w - pct({15.18, 16.19, 0.00, 17.21, 0.71, 13.68, 31.52, 5.51})) <= 1e-4 + 1e-9);
  CHECK(*five.lambda == doctest::Approx(0.1038).epsilon(0.01));
  CHECK(effective_bets(five.weights.w) >= 5.0 - 1e-6);

  const HerfindahlResult anchor = gmv_herfindahl(u, up, 6.435);
  CHECK(max_abs(anchor.weights.w - pct({14.74, 15.45, 1.79, 15.49, 6.17, 13.83, 23.21, 9.31})) <= 1e-4 + 1e-9);

  const HerfindahlResult eight = gmv_herfindahl(u, up, 8.0);
  CHECK(std::isinf(*eight.lambda));
  CHECK(max_abs(eight.weights.w - ew(8)) <= 1e-12);

  const HerfindahlResult one = gmv_herfindahl(u, up, 1.0);
  CHECK(*one.lambda == 0.0);
  CHECK(one.weights.w(6) == doctest::Approx(1.0).epsilon(1e-8));
  const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 10.0);

  try {
    gmv_herfindahl(u, up, 9.0);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnreachableDiversification);
  }
}

TEST_CASE("gmv_herfindahl: effective bets grow with the ridge weight") {
  const AssetUniverse u = parameter_set_1().universe;
  PortfolioConstraints c = PortfolioConstraints::long_only_budget();
  double prev = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double lam = static_cast<double>(k);
    const Matrix Q = u.cov + lam * Matrix::Identity(8, 8);
    const Vector x = qp_solve(portfolio_qp(Q, Vector::Zero(8), c)).x;
    const double nb = effective_bets(x);
    CHECK(nb >= prev - 1e-9);
    prev = nb;
  }
}

TEST_CASE("gmv_herfindahl: bisection and ADMM agree") {
  const AssetUniverse u = parameter_set_1().universe;
  Vector up = Vector::Ones(8);
  for (double nb : {2.0, 4.0, 6.0, 7.5}) {
    const HerfindahlResult a = gmv_herfindahl(u, up, nb, HerfindahlMethod::LambdaBisection);
    const HerfindahlResult b = gmv_herfindahl(u, up, nb, HerfindahlMethod::Admm);
    CHECK(max_abs(a.weights.w - b.weights.w) <= 1e-4);
    CHECK(effective_bets(b.weights.w) >= nb - 1e-6);
    CHECK(!b.lambda.has_value());
  }
  up = Vector::Constant(8, 0.2);
  const HerfindahlResult a = gmv_herfindahl(u, up, 6.0, HerfindahlMethod::LambdaBisection);
  const HerfindahlResult b = gmv_herfindahl(u, up, 6.0, HerfindahlMethod::Admm);
  CHECK(max_abs(a.weights.w - b.weights.w) <= 1e-4);
  CHECK(b.weights.w.maxCoeff() <= 0.2 + 1e-8);
}

TEST_CASE("gmv_diversified") {
  const AssetUniverse u = parameter_set_1().universe;
  const Vector up = Vector::Ones(8);
  const HerfindahlResult none = gmv_diversified(u, up, NoDiversification{});
  CHECK(max_abs(none.weights.w - mvo_gamma(u, 0.0, PortfolioConstraints::long_only_budget()).w) <= 1e-6);

  const HerfindahlResult full = gmv_diversified(u, up, ShannonEntropyFloor{std::log(8.0)});
  CHECK(max_abs(full.weights.w - ew(8)) <= 1e-12);
  const HerfindahlResult zero = gmv_diversified(u, up, ShannonEntropyFloor{0.0});
  CHECK(max_abs(zero.weights.w - none.weights.w) <= 1e-6);

  const HerfindahlResult mid = gmv_diversified(u, up, ShannonEntropyFloor{1.8});
  CHECK(shannon_entropy(mid.weights.w) >= 1.8 - 1e-6);
  CHECK(budget_ok(mid.weights.w, 1e-12));
  // Feasible points on the entropy floor cannot beat it.
  const double f = mid.weights.w.dot(u.cov * mid.weights.w);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 1000; ++t) {
    Vector w = random_vector(rng, 8, 0.0, 1.0);
    w /= w.sum();
    if (shannon_entropy(w) < 1.8) continue;
    CHECK(f <= w.dot(u.cov * w) + 1e-8);
  }
  CHECK_THROWS_AS(gmv_diversified(u, up, ShannonEntropyFloor{2.5}), Error);
  CHECK_THROWS_AS(gmv_diversified(u, up, EffectiveBets{0.5}), Error);
}

TEST_CASE("project_entropy_floor") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 200; ++t) {
    const Vector v = random_vector(rng, 6, -0.5, 1.5);
    const double se = 0.5 + 1.5 * std::uniform_real_distribution<double>(0, 1)(rng);
    const Vector x = project_entropy_floor(v, se);
    CHECK(shannon_entropy(x) >= se - 1e-9);
    // Projection onto a convex set: idempotent and no feasible point on the
    // segment towards a random feasible point is closer.
    CHECK(max_abs(project_entropy_floor(x, se) - x) <= 1e-9);
    Vector z = random_vector(rng, 6, 0.05, 0.5);
    if (shannon_entropy(z) < se) continue;
    CHECK((v - x).dot(z - x) <= 1e-8);
  }
}

TEST_CASE("rebalance_penalized") {
  const AssetUniverse u = parameter_set_1().universe;
  const Vector xt = ew(8);
  const PortfolioWeights gmv = mvo_gamma(u, 0.0, PortfolioConstraints::long_only_budget());

  RebalanceContext zero_cost{xt};
  CHECK(max_abs(rebalance_penalized(u, zero_cost).weights.w - gmv.w) <= 1e-6);

  RebalanceContext frozen{xt};
  frozen.turnover_cap = 0.0;
  CHECK(max_abs(rebalance_penalized(u, frozen).weights.w - xt) <= 1e-8);

  RebalanceContext costly{xt};
  costly.c_minus = Vector::Constant(8, 0.01);
  costly.c_plus = Vector::Constant(8, 0.01);
  costly.cost_scale = 0.01;
  const Vector x = rebalance_penalized(u, costly).weights.w;
  auto cost = [&](const Vector& w) {
    const Vector d = w - xt;
    return 0.01 * (0.01 * d.cwiseMax(0.0).sum() + 0.01 * (-d).cwiseMax(0.0).sum());
  };
  const double fg = 0.5 * gmv.w.dot(u.cov * gmv.w);
  const double fx = 0.5 * x.dot(u.cov * x) + cost(x);
  CHECK(fx <= fg + cost(gmv.w) + 1e-10);
  CHECK(fx >= fg - 1e-10);

  RebalanceContext capped{xt};
  capped.turnover_cap = 0.3;
  const Vector y = rebalance_penalized(u, capped).weights.w;
  CHECK(turnover(y, xt) <= 0.3 + 1e-8);
  CHECK(max_abs(y - mvo_turnover(u, 0.0, xt, 0.3).weights.w) <= 1e-5);
}

TEST_CASE("EllipsoidProjector") {
  std::mt19937_64 rng(5);
  const Matrix S = testutil::random_spd(rng, 5);
  const EllipsoidProjector P(S, 0.7);
  for (int t = 0; t < 200; ++t) {
    const Vector v = random_vector(rng, 5, -3, 3);
    const Vector x = P(v);
    CHECK(x.dot(S * x) <= 0.49 + 1e-10);
    CHECK(max_abs(P(x) - x) <= 1e-10);
    Vector z = random_vector(rng, 5, -1, 1);
    if (z.dot(S * z) > 0.49) continue;
    CHECK((v - x).dot(z - x) <= 1e-8);
  }
}

TEST_CASE("kl_portfolio") {
  const AssetUniverse u = set1_with_returns();
  const Vector e = ew(8);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(max_abs(kl_portfolio(u, e, -inf, inf).weights.w - e) <= 1e-8);
  CHECK(max_abs(kl_portfolio(u, e, e.dot(u.mu), portfolio_volatility(e, u.cov)).weights.w - e) <= 1e-8);

  const Vector ref = pct({11.40, 12.29, 5.49, 11.91, 6.65, 10.81, 33.52, 7.93}) / 1.0;
  const Vector refn = ref / ref.sum();
  const HerfindahlResult r = kl_portfolio(u, refn, 0.0, 0.12);
  const Vector& x = r.weights.w;
  CHECK(portfolio_volatility(x, u.cov) <= 0.12 + 1e-6);
  CHECK(x.dot(u.mu) >= -1e-6);
  const double kl = kl_divergence(x, refn);
  std::mt19937_64 rng(6);
  int tried = 0;
  while (tried < 1000) {
    Vector w = random_vector(rng, 8, 0.0, 1.0);
    w = w.cwiseProduct(refn);
    w /= w.sum();
    if (portfolio_volatility(w, u.cov) > 0.12) continue;
    ++tried;
    CHECK(kl <= kl_divergence(w, refn) + 1e-9);
  }
  try {
    kl_portfolio(u, e, 0.5, inf);
    FAIL("expected throw");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::InfeasibleTargets);
  }
  try {
    kl_portfolio(u, e, 0.15, 0.05);
    FAIL("expected throw");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::InfeasibleTargets);
  }
}

TEST_CASE("negative_curvature") {
  Matrix D(2, 2);
  D << 0, 1, 1, 0;
  CHECK(negative_curvature(D) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(negative_curvature(Matrix::Identity(3, 3)) == 0.0);
  std::mt19937_64 rng(7);
  const Matrix M = testutil::random_matrix(rng, 6, 6);
  const Matrix S = M + M.transpose();
  const double lmin = min_eigenvalue(S);
  CHECK(negative_curvature(S) == doctest::Approx(std::max(0.0, -lmin)).epsilon(1e-6));
}

TEST_CASE("rqe_portfolio") {
  CHECK(max_abs(rqe_portfolio(Matrix::Zero(4, 4)).weights.w - ew(4)) <= 1e-12);

  Matrix D(2, 2);
  D << 0, 1, 1, 0;
  const Vector x = rqe_portfolio(D).weights.w;
  CHECK(x(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(x(1) == doctest::Approx(0.0).epsilon(1e-8));

  const AssetUniverse u = parameter_set_1().universe;
  const Matrix Dr = Matrix::Ones(8, 8) - u.rho;
  const HerfindahlResult r = rqe_portfolio(Dr);
  const Vector& w = r.weights.w;
  CHECK(budget_ok(w, 1e-12));
  CHECK(w.minCoeff() >= 0.0);
  // KKT on the simplex: the gradient is constant on the support and no smaller off it.
  const Vector g = Dr * w;
  double level = 0.0;
  int support = 0;
  for (Eigen::Index i = 0; i < 8; ++i) {
    if (w(i) > 1e-6) {
      level += g(i);
      ++support;
    }
  }
  level /= support;
  for (Eigen::Index i = 0; i < 8; ++i) {
    if (w(i) > 1e-6) {
      CHECK(std::abs(g(i) - level) <= 1e-6);
    } else {
      CHECK(g(i) >= level - 1e-6);
    }
  }
  Matrix bad = Dr;
  bad(0, 0) = 1.0;
  CHECK_THROWS_AS(rqe_portfolio(bad), Error);
}
