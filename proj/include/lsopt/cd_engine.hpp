#pragma once

#include "lsopt/prox_ops.hpp"
#include "lsopt/solver_report.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <variant>
#include <vector>

namespace lsopt {

struct Cyclic {};

struct UniformRandom {
  std::uint64_t seed = 42;
};

// pi_i proportional to L_i^alpha; alpha = +inf selects argmax L (greedy).
struct LipschitzWeighted {
  double alpha = 1.0;
  std::uint64_t seed = 42;
  Vector constants;
};

using CoordinateRule = std::variant<Cyclic, UniformRandom, LipschitzWeighted>;

// Sampling distribution of a rule over n coordinates.
Vector coordinate_probabilities(const CoordinateRule& rule, Eigen::Index n);

// Produces the coordinate visited at each step.
class CoordinateSequence {
 public:
  CoordinateSequence(const CoordinateRule& rule, Eigen::Index n);
  Eigen::Index next();

 private:
  Eigen::Index n_;
  Eigen::Index pos_ = 0;
  bool cyclic_ = true;
  std::mt19937_64 rng_;
  std::discrete_distribution<Eigen::Index> dist_;
};

struct CdConfig {
  double tol = 1e-8;
  int max_cycles = 10000;
  CoordinateRule rule = Cyclic{};
};

struct CoordinateProblem {
  // Exact minimizer over coordinate i with the others held fixed.
  std::function<double(Eigen::Index i, const Vector& x)> coord_min;
  // Optional hook after x_i moved by delta; used to keep cached products current.
  std::function<void(Eigen::Index i, double delta)> on_change;
  // Optional; recorded once per cycle.
  std::function<double(const Vector& x)> objective;
};

// A cycle is n coordinate steps. Termination: max |x_i^(k+1) - x_i^(k)| <= tol.
// The confirming cycle is not counted in report.iterations.
Solution ccd_generic(const CoordinateProblem& problem, const Vector& x0, const CdConfig& cfg = {});

Solution cd_ols(const Matrix& X, const Vector& Y, const Vector& x0, const CdConfig& cfg = {});
Solution cd_lasso(const Matrix& X, const Vector& Y, double lambda, const Vector& x0, const CdConfig& cfg = {});

// Per-cycle coefficient snapshots of cd_lasso, starting with x0.
std::vector<Vector> cd_lasso_trace(const Matrix& X, const Vector& Y, double lambda, const Vector& x0,
                                   const CdConfig& cfg = {});

// min 1/2 x'Qx - x'R subject to lower <= x <= upper.
Solution ccd_qp_box(const Matrix& Q, const Vector& R, const Vector& lower, const Vector& upper, const Vector& x0,
                    const CdConfig& cfg = {});

// min 1/2 x'Qx - x'R - sum lambda_i ln x_i.
Solution ccd_qp_logbarrier(const Matrix& Q, const Vector& R, const Vector& lambda, const Vector& x0,
                           const CdConfig& cfg = {});

// Unscaled ERC point; lambda <= 0 selects sqrt(x0' Sigma x0).
Solution ccd_erc(const Matrix& sigma, double lambda, const Vector& x0, const CdConfig& cfg = {});

// Unscaled risk-budgeting point for R(x) = -x'(mu - r) + xi sqrt(x' Sigma x).
Solution ccd_rb_stdev(const Vector& mu, double r, double xi, const Matrix& sigma, const Vector& budgets,
                      double lambda, const Vector& x0, const CdConfig& cfg = {});

// x_i <- P_{Omega_i}(x_i - eta g_i(x)) for pointwise sets (each a one-dimensional set).
Solution projected_cd(const std::function<double(Eigen::Index i, const Vector& x)>& grad,
                      const std::vector<ConvexSet>& sets, double eta, const Vector& x0, const CdConfig& cfg = {});

}  // namespace lsopt
