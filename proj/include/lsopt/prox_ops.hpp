#pragma once

#include "lsopt/core_numerics.hpp"

#include <functional>
#include <memory>
#include <string>
#include <variant>

namespace lsopt {

// v -> prox_{lambda f}(v) with every parameter bound at construction.
class ProxFn {
 public:
  using Fn = std::function<Vector(const Vector&)>;

  ProxFn() = default;
  ProxFn(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}

  Vector operator()(const Vector& v) const;
  const std::string& name() const { return name_; }
  explicit operator bool() const { return static_cast<bool>(fn_); }

 private:
  std::string name_;
  Fn fn_;
};

// ADMM needs prox_{phi^-1 f}; builders map phi to the bound operator.
using ProxBuilder = std::function<ProxFn(double phi)>;

struct Hyperplane {
  Vector a;
  double b = 0.0;
};

struct Halfspace {
  Vector c;
  double d = 0.0;
};

// {x : A x = B}; the pseudo-inverse is computed once by make().
struct AffineSet {
  Matrix A;
  Vector B;
  std::shared_ptr<const Matrix> pinv;
  static AffineSet make(Matrix A, Vector B);
};

struct Box {
  Vector lower;
  Vector upper;
};

struct LpBall {
  int p = 2;  // 1, 2, or 0 for the infinity norm
  Vector center;
  double radius = 1.0;
};

struct LpBallComplement {
  int p = 2;  // 1 or 2
  Vector center;
  double radius = 1.0;
};

// Probability simplex {x >= 0, 1'x = 1}.
struct Simplex {};

struct Polyhedron {
  Matrix C;
  Vector D;
};

inline constexpr int kInfNorm = 0;

using ConvexSet =
    std::variant<Hyperplane, Halfspace, AffineSet, Box, LpBall, LpBallComplement, Simplex, Polyhedron>;

Vector project(const ConvexSet& set, const Vector& v);
ProxFn projection(ConvexSet set);
void validate(const ConvexSet& set);

Vector soft_threshold(const Vector& v, double lambda);
Vector soft_threshold(const Vector& v, const Vector& lambda);
Vector soft_threshold_two_sided(const Vector& v, const Vector& lambda_minus, const Vector& lambda_plus);
Vector truncate(const Vector& v, const Vector& lower, const Vector& upper);

Vector prox_max(const Vector& v, double lambda);
Vector prox_lp_norm(int p, const Vector& v, double lambda);
Vector prox_log_barrier(const Vector& v, double lambda, const Vector& b);
Vector prox_quadratic(const Vector& v, const Matrix& Q, const Vector& R);
Vector prox_kl(const Vector& v, double lambda, const Vector& ref);
Vector prox_bid_ask(const Vector& v, double lambda, const Vector& alpha, const Vector& beta,
                    const Vector& gamma);
Vector prox_sum_k_largest(const Vector& v, double lambda, int k);
Vector prox_scale_translate(const ProxFn& base, double a, const Vector& b, const Vector& v);

// Turnover ball around x0: x0 + P_{B1(0, r)}(v - x0).
Vector prox_turnover(const Vector& v, const Vector& x0, double radius);

// Bound factories used by the engines.
namespace prox {

ProxFn zero();
ProxFn l1(double lambda);
ProxFn l1_weighted(const Vector& lambda, const Vector& center);
ProxFn lp_norm(int p, double lambda);
ProxFn max(double lambda);
ProxFn log_barrier(double lambda, Vector b);
ProxFn quadratic(const Matrix& Q, Vector R);
ProxFn kl(double lambda, Vector ref);
ProxFn bid_ask(double lambda, Vector alpha, Vector beta, Vector gamma);
ProxFn sum_k_largest(double lambda, int k);
ProxFn scale_translate(ProxFn base, double a, Vector b);

}  // namespace prox

}  // namespace lsopt
