#include "doctest.h"
#include "test_util.hpp"

#include "lsopt/prox_ops.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

using namespace lsopt;
using testutil::max_abs;
using testutil::random_vector;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Ternary search on a unimodal scalar function.
double argmin_scalar(const std::function<double(double)>& f, double lo, double hi) {
  for (int it = 0; it < 300; ++it) {
    const double a = lo + (hi - lo) / 3.0;
    const double b = hi - (hi - lo) / 3.0;
    if (f(a) < f(b)) hi = b; else lo = a;
  }
  return 0.5 * (lo + hi);
}

struct NamedProx {
  std::string name;
  ProxFn fn;
  bool projection;
};

std::vector<NamedProx> catalogue(Eigen::Index n) {
  std::mt19937_64 rng(99);
  const Vector lo = -0.5 * Vector::Ones(n);
  const Vector hi = Vector::Ones(n);
  const Vector c = random_vector(rng, n);
  const Vector w = random_vector(rng, n, 0.1, 2.0);
  const Vector w2 = random_vector(rng, n, 0.1, 2.0);
  Matrix A = testutil::random_matrix(rng, 2, n);
  Matrix C = testutil::random_matrix(rng, 3, n);
  Vector D = Vector::Ones(3);
  Matrix Q = testutil::random_spd(rng, n);
  std::vector<NamedProx> out;
  out.push_back({"soft_threshold", prox::l1(0.3), false});
  const auto two_sided = [w, w2](const Vector& v) { return soft_threshold_two_sided(v, w, w2); };
  out.push_back({"two_sided", ProxFn("two_sided", two_sided), false});
  out.push_back({"truncate", projection(Box{lo, hi}), true});
  out.push_back({"hyperplane", projection(Hyperplane{c, 0.4}), true});
  out.push_back({"halfspace", projection(Halfspace{c, 0.1}), true});
  out.push_back({"affine", projection(AffineSet::make(A, Vector::Ones(2))), true});
  out.push_back({"l1_ball", projection(LpBall{1, c, 0.7}), true});
  out.push_back({"l2_ball", projection(LpBall{2, c, 0.7}), true});
  out.push_back({"linf_ball", projection(LpBall{kInfNorm, c, 0.7}), true});
  out.push_back({"simplex", projection(Simplex{}), true});
  out.push_back({"polyhedron", projection(Polyhedron{C, D}), true});
  out.push_back({"max", prox::max(0.6), false});
  out.push_back({"l1_norm", prox::lp_norm(1, 0.4), false});
  out.push_back({"l2_norm", prox::lp_norm(2, 0.4), false});
  out.push_back({"linf_norm", prox::lp_norm(kInfNorm, 0.4), false});
  out.push_back({"log_barrier", prox::log_barrier(0.5, w), false});
  out.push_back({"quadratic", prox::quadratic(Q, c), false});
  out.push_back({"kl", prox::kl(0.7, w), false});
  out.push_back({"bid_ask", prox::bid_ask(0.5, w, w2, c), false});
  out.push_back({"sum_k_largest", prox::sum_k_largest(0.8, 2), false});
  out.push_back({"scale_translate", prox::scale_translate(prox::l1(0.3 * 4.0), 2.0, c), false});
  out.push_back({"turnover", ProxFn("turnover", [c](const Vector& v) { return prox_turnover(v, c, 0.5); }), true});
  return out;
}

}  // namespace

TEST_CASE("soft_threshold examples") {
  CHECK(max_abs(soft_threshold(vec({3, -0.5}), 1.0) - vec({2, 0})) == 0.0);
  const Vector v = vec({-2, -1, 0, 1, 2});
  CHECK(max_abs(soft_threshold(v, 0.0) - v) == 0.0);
  CHECK(max_abs(soft_threshold(v, 1.5) - vec({-0.5, 0, 0, 0, 0.5})) == 0.0);
  CHECK_THROWS_AS(soft_threshold(v, -1.0), Error);
}

TEST_CASE("two-sided soft threshold") {
  CHECK(soft_threshold_two_sided(vec({2}), vec({1}), vec({1}))(0) == doctest::Approx(1.0));
  CHECK(soft_threshold_two_sided(vec({-3}), vec({1}), vec({5}))(0) == doctest::Approx(-2.0));
  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    const Vector v = random_vector(rng, 4, -3, 3);
    const double l = std::abs(v(0));
    const Vector lv = Vector::Constant(4, l);
    CHECK(max_abs(soft_threshold_two_sided(v, lv, lv) - soft_threshold(v, l)) <= 1e-15);
  }
  try {
    soft_threshold_two_sided(vec({1}), vec({-1}), vec({1}));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NegativeLambda);
  }
}

TEST_CASE("truncate") {
  CHECK(truncate(vec({1.5}), vec({-0.5}), vec({1}))(0) == 1.0);
  const Vector in = vec({0.2, 0.3});
  CHECK(max_abs(truncate(in, Vector::Zero(2), Vector::Ones(2)) - in) == 0.0);
  CHECK(max_abs(truncate(vec({-1, 0.3, 2}), Vector::Zero(3), Vector::Ones(3)) - vec({0, 0.3, 1})) == 0.0);
  try {
    truncate(in, Vector::Ones(2), Vector::Zero(2));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvertedBounds);
  }
}

TEST_CASE("project examples") {
  CHECK(max_abs(project(Hyperplane{vec({1, 1}), 1.0}, vec({1, 1})) - vec({0.5, 0.5})) <= 1e-15);
  CHECK(max_abs(project(LpBall{1, Vector::Zero(2), 1.0}, vec({2, 0})) - vec({1, 0})) <= 1e-15);
  CHECK(max_abs(project(LpBall{2, Vector::Zero(2), 1.0}, vec({0, 3})) - vec({0, 1})) <= 1e-15);
  CHECK(max_abs(project(LpBallComplement{2, Vector::Zero(2), 2.0}, vec({1, 0})) - vec({2, 0})) <= 1e-15);
  CHECK(max_abs(project(Simplex{}, vec({0.5, 0.5})) - vec({0.5, 0.5})) <= 1e-15);
  // Feasible points stay put, boundary included.
  CHECK(max_abs(project(LpBall{2, Vector::Zero(2), 1.0}, vec({0, 1})) - vec({0, 1})) == 0.0);
  // l1 complement with sign(0) = +1.
  CHECK(max_abs(project(LpBallComplement{1, Vector::Zero(2), 1.0}, vec({0, 0})) - vec({0.5, 0.5})) <= 1e-15);
  CHECK(max_abs(project(LpBallComplement{1, Vector::Zero(2), 1.0}, vec({-0.2, 0.1})) - vec({-0.55, 0.45})) <= 1e-15);
}

TEST_CASE("project errors") {
  try {
    project(Hyperplane{Vector::Zero(2), 1.0}, vec({1, 1}));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateSet);
  }
  try {
    project(Hyperplane{vec({1, 1, 1}), 1.0}, vec({1, 1}));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
  CHECK_THROWS_AS(project(LpBall{3, Vector::Zero(2), 1.0}, vec({1, 1})), Error);
  CHECK_THROWS_AS(project(LpBall{2, Vector::Zero(2), 0.0}, vec({1, 1})), Error);
}

TEST_CASE("prox_max and the simplex Moreau identity") {
  CHECK(max_abs(prox_max(vec({1, 2}), 1.0) - vec({1, 1})) <= 1e-15);
  CHECK(max_abs(prox_max(Vector::Constant(4, 2.0), 4 * 0.25) - Vector::Constant(4, 1.75)) <= 1e-15);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lam(0.05, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const Vector v = random_vector(rng, 1 + t % 9, -2, 2);
    const double l = lam(rng);
    const Vector lhs = prox_max(v, l) + l * project(Simplex{}, v / l);
    CHECK(max_abs(lhs - v) <= 1e-12);
  }
}

TEST_CASE("prox_lp_norm") {
  const double l = 0.5;
  const Vector v = vec({0.6, 0.8});  // norm 1 = 2 lambda
  CHECK(max_abs(prox_lp_norm(2, v, l) - v / 2.0) <= 1e-15);
  CHECK(max_abs(prox_lp_norm(2, vec({0.3, 0.1}), l)) == 0.0);
  CHECK(max_abs(prox_lp_norm(kInfNorm, vec({1, 2}), 1.0) - vec({1, 1})) <= 1e-15);
  CHECK_THROWS_AS(prox_lp_norm(3, v, l), Error);
}

TEST_CASE("Moreau decomposition for norm/ball pairs") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> lam(0.05, 2.0);
  const std::pair<int, int> pairs[] = {{kInfNorm, 1}, {2, 2}, {1, kInfNorm}};
  for (int t = 0; t < 1000; ++t) {
    const Vector v = random_vector(rng, 1 + t % 7, -2, 2);
    const double l = lam(rng);
    for (auto [p, q] : pairs) {
      const Vector ball = project(LpBall{p, Vector::Zero(v.size()), 1.0}, v / l);
      CHECK(max_abs(prox_lp_norm(q, v, l) + l * ball - v) <= 1e-12);
    }
  }
}

TEST_CASE("prox_log_barrier") {
  CHECK(prox_log_barrier(vec({0}), 1.0, vec({1}))(0) == doctest::Approx(1.0));
  CHECK(prox_log_barrier(vec({3}), 1.0, vec({1}))(0) == doctest::Approx((3 + std::sqrt(13.0)) / 2));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int t = 0; t < 1000; ++t) {
    const Vector v = random_vector(rng, 3, -50, 50);
    const Vector b = random_vector(rng, 3, 0.01, 3);
    const double l = u(rng);
    const Vector x = prox_log_barrier(v, l, b);
    CHECK((x.array() > 0.0).all());
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(-l * b(i) / x(i) + x(i) - v(i)) <= 1e-12 * (1.0 + std::abs(v(i))));
    }
  }
  try {
    prox_log_barrier(vec({1}), 1.0, vec({0}));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveWeight);
  }
}

TEST_CASE("prox_quadratic") {
  std::mt19937_64 rng(4);
  const Vector v = random_vector(rng, 4);
  CHECK(max_abs(prox_quadratic(v, Matrix::Identity(4, 4), Vector::Zero(4)) - v / 2.0) <= 1e-15);
  Matrix one(1, 1);
  one << 1;
  CHECK(prox_quadratic(vec({1}), one, vec({1}))(0) == doctest::Approx(1.0));
  const Matrix Q = testutil::random_spd(rng, 5);
  const Vector R = random_vector(rng, 5);
  const Vector w = random_vector(rng, 5);
  const Vector x = prox_quadratic(w, Q, R);
  CHECK(max_abs((Q + Matrix::Identity(5, 5)) * x - (R + w)) <= 1e-10);
  Matrix bad(2, 2);
  bad << -3, 0, 0, -3;
  CHECK_THROWS_AS(prox_quadratic(Vector::Zero(2), bad, Vector::Zero(2)), Error);
}

TEST_CASE("prox_kl") {
  CHECK(prox_kl(vec({1}), 1.0, vec({1}))(0) == doctest::Approx(0.5671432904097838).epsilon(1e-14));
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const Vector v = random_vector(rng, 3, -5, 5);
    const Vector ref = random_vector(rng, 3, 0.05, 2.0);
    const double l = u(rng);
    const Vector x = prox_kl(v, l, ref);
    for (int i = 0; i < 3; ++i) {
      const double g = l * (1.0 / ref(i) + std::log(x(i) / ref(i))) + x(i) - v(i);
      CHECK(std::abs(g) <= 1e-10 * (1.0 + std::abs(v(i))));
    }
    const Vector x2 = prox_kl(v + vec({0.3, 0.0, 1.0}), l, ref);
    CHECK(x2(0) > x(0));
    CHECK(x2(2) > x(2));
  }
  // Very large v / lambda stays finite.
  const Vector big = prox_kl(vec({1e4}), 1e-2, vec({0.5}));
  CHECK(std::isfinite(big(0)));
  CHECK(std::abs(1e-2 * (2.0 + std::log(big(0) / 0.5)) + big(0) - 1e4) <= 1e-8);
}

TEST_CASE("prox_bid_ask") {
  const Vector g = vec({0.2, -0.1});
  const Vector v = vec({1.0, 0.5});
  CHECK(max_abs(prox_bid_ask(v, 1.0, Vector::Zero(2), Vector::Zero(2), g) - v) == 0.0);
  CHECK(max_abs(prox_bid_ask(g, 1.0, Vector::Ones(2), Vector::Ones(2), g) - g) == 0.0);
  const Vector shifted = prox_bid_ask(g + 2.0 * Vector::Ones(2), 1.0, Vector::Ones(2), Vector::Ones(2), g);
  CHECK(max_abs(shifted - (g + Vector::Ones(2))) <= 1e-15);
  try {
    prox_bid_ask(v, 1.0, vec({-1, 0}), Vector::Zero(2), g);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NegativeCost);
  }
}

TEST_CASE("prox_sum_k_largest") {
  CHECK(max_abs(prox_sum_k_largest(vec({10, 10}), 1.0, 2) - vec({9, 9})) <= 1e-12);
  CHECK(max_abs(prox_sum_k_largest(vec({1, 2}), 1.0, 1) - prox_max(vec({1, 2}), 1.0)) <= 1e-10);
  std::mt19937_64 rng(12);
  for (int t = 0; t < 1000; ++t) {
    const Vector v = random_vector(rng, 5, 0.0, 3.0);
    const Vector x = prox_sum_k_largest(v, 0.7, 1 + t % 5);
    CHECK((x.array() <= v.array() + 1e-12).all());
  }
  try {
    prox_sum_k_largest(vec({1, 2}), 1.0, 3);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadK);
  }
}

TEST_CASE("prox_scale_translate") {
  std::mt19937_64 rng(13);
  const ProxFn base = prox::l1(0.4);
  for (int t = 0; t < 1000; ++t) {
    const Vector v = random_vector(rng, 4, -2, 2);
    CHECK(max_abs(prox_scale_translate(base, 1.0, Vector::Zero(4), v) - base(v)) == 0.0);
    CHECK(max_abs(prox_scale_translate(base, -1.0, Vector::Zero(4), v) - soft_threshold(v, 0.4)) <= 1e-15);
    // Translated ball: P_{B(c, r)}(v) = P_{B(0, r)}(v - c) + c.
    const Vector c = random_vector(rng, 4);
    const ProxFn ball0 = projection(LpBall{2, Vector::Zero(4), 0.5});
    const Vector direct = project(LpBall{2, c, 0.5}, v);
    CHECK(max_abs(prox_scale_translate(ball0, 1.0, -c, v) - direct) <= 1e-14);
  }
  // Grid check of the a = -1 case against the scalar objective |x| + 1/2 (x - v)^2.
  for (double v : {-2.0, -0.3, 0.0, 0.2, 1.7}) {
    const double x = prox_scale_translate(prox::l1(1.0), -1.0, Vector::Zero(1), vec({v}))(0);
    const double ref = argmin_scalar([v](double t) { return std::abs(-t) + 0.5 * (t - v) * (t - v); }, -5, 5);
    CHECK(std::abs(x - ref) <= 1e-6);
  }
  CHECK_THROWS_AS(prox_scale_translate(base, 0.0, Vector::Zero(1), vec({1})), Error);
}

TEST_CASE("scalar proxes match a ternary-search oracle") {
  const double l = 0.7;
  for (double v : {-3.0, -0.9, -0.2, 0.0, 0.4, 1.1, 2.5}) {
    auto check = [&](const Vector& got, const std::function<double(double)>& f) {
      const double ref = argmin_scalar([&](double x) { return f(x) + 0.5 * (x - v) * (x - v); }, -20, 20);
      CHECK(std::abs(got(0) - ref) <= 1e-6);
    };
    check(soft_threshold(vec({v}), l), [&](double x) { return l * std::abs(x); });
    check(soft_threshold_two_sided(vec({v}), vec({0.3}), vec({0.9})),
          [](double x) { return x >= 0 ? 0.9 * x : -0.3 * x; });
    check(prox_lp_norm(2, vec({v}), l), [&](double x) { return l * std::abs(x); });
    check(prox_lp_norm(kInfNorm, vec({v}), l), [&](double x) { return l * std::abs(x); });
    check(prox_max(vec({v}), l), [&](double x) { return l * x; });
    check(prox_bid_ask(vec({v}), l, vec({0.5}), vec({0.2}), vec({0.1})),
          [&](double x) { return l * (x >= 0.1 ? 0.2 * (x - 0.1) : 0.5 * (0.1 - x)); });
    const Vector got = prox_log_barrier(vec({v}), l, vec({1.5}));
    const double ref = argmin_scalar([&](double x) { return -l * 1.5 * std::log(x) + 0.5 * (x - v) * (x - v); }, 1e-12, 20);
    CHECK(std::abs(got(0) - ref) <= 1e-6);
    const double xr = 0.6;
    const Vector gk = prox_kl(vec({v}), l, vec({xr}));
    const double rk = argmin_scalar(
        [&](double x) { return l * (x * std::log(x / xr) + x * (1.0 / xr - 1.0)) + 0.5 * (x - v) * (x - v); }, 1e-14, 20);
    CHECK(std::abs(gk(0) - rk) <= 1e-6);
  }
}

TEST_CASE("prox objective is minimal against random perturbations") {
  std::mt19937_64 rng(21);
  const Eigen::Index n = 4;
  const Vector b = random_vector(rng, n, 0.2, 2.0);
  const Vector ref = random_vector(rng, n, 0.2, 2.0);
  const Matrix Q = testutil::random_spd(rng, n);
  const Vector R = random_vector(rng, n);
  const double l = 0.8;
  struct Case {
    ProxFn fn;
    std::function<double(const Vector&)> f;
  };
  std::vector<Case> cases{
      {prox::log_barrier(l, b), [&](const Vector& x) { return -l * b.dot(x.array().log().matrix()); }},
      {prox::quadratic(Q, R), [&](const Vector& x) { return 0.5 * x.dot(Q * x) - x.dot(R); }},
      {prox::kl(l, ref),
       [&](const Vector& x) {
         return l * (x.array() * (x.array() / ref.array()).log() + x.array() * (ref.array().inverse() - 1.0)).sum();
       }},
      {prox::lp_norm(2, l), [&](const Vector& x) { return l * x.norm(); }},
  };
  for (const auto& c : cases) {
    for (int t = 0; t < 20; ++t) {
      const Vector v = random_vector(rng, n, -2, 2);
      const Vector x = c.fn(v);
      const double base = c.f(x) + 0.5 * (x - v).squaredNorm();
      for (int d = 0; d < 100; ++d) {
        Vector dir = random_vector(rng, n);
        dir.normalize();
        const Vector y = x + 1e-4 * dir;
        if ((y.array() <= 0.0).any()) continue;
        CHECK(base <= c.f(y) + 0.5 * (y - v).squaredNorm() + 1e-14);
      }
    }
  }
}

TEST_CASE("firm non-expansiveness of the catalogue") {
  const Eigen::Index n = 5;
  const auto ops = catalogue(n);
  CHECK(ops.size() >= 15);
  std::mt19937_64 rng(31);
  for (const auto& op : ops) {
    int bad = 0;
    for (int t = 0; t < 1000; ++t) {
      const Vector u = random_vector(rng, n, -3, 3);
      const Vector v = random_vector(rng, n, -3, 3);
      const Vector d = op.fn(u) - op.fn(v);
      const double lhs = d.squaredNorm();
      const double rhs = d.dot(u - v);
      if (lhs > rhs + 1e-9 * (1.0 + rhs) || std::sqrt(lhs) > (u - v).norm() + 1e-9) ++bad;
    }
    INFO(op.name);
    CHECK(bad == 0);
  }
}

TEST_CASE("idempotence of every projection") {
  const Eigen::Index n = 5;
  std::mt19937_64 rng(41);
  for (const auto& op : catalogue(n)) {
    if (!op.projection) continue;
    for (int t = 0; t < 1000; ++t) {
      const Vector v = random_vector(rng, n, -3, 3);
      const Vector p = op.fn(v);
      INFO(op.name);
      CHECK(max_abs(op.fn(p) - p) <= 1e-12);
    }
  }
  // Ball complements are not convex but their stated selections are still idempotent.
  for (int p : {1, 2}) {
    const ProxFn pc = projection(LpBallComplement{p, Vector::Zero(n), 1.5});
    for (int t = 0; t < 1000; ++t) {
      const Vector v = random_vector(rng, n, -1, 1);
      const Vector x = pc(v);
      CHECK(max_abs(pc(x) - x) <= 1e-12);
    }
  }
}
