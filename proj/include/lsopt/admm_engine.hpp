#pragma once

#include "lsopt/prox_ops.hpp"
#include "lsopt/solver_report.hpp"

#include <functional>
#include <limits>
#include <optional>

namespace lsopt {

struct AdmmConfig {
  double phi0 = 1.0;
  double mu = 1e3;
  double tau = 2.0;
  double tau_prime = 2.0;
  double eps = 1e-15;
  double eps_dual = 1e-15;
  int max_iter = 100000;
  bool adaptive = true;
  // Clamp for the adaptive penalty; subproblems may need phi above a floor.
  double phi_min = 0.0;
  double phi_max = std::numeric_limits<double>::infinity();
};

// min f_x(x) + f_y(y) subject to A x + B y = c. Missing A means I, missing B
// means -I, missing c means 0.
struct AdmmProblem {
  std::optional<Matrix> A;
  std::optional<Matrix> B;
  std::optional<Vector> c;
  // argmin_x f_x(x) + phi/2 ||A x + B y - c + u||^2
  std::function<Vector(const Vector& y, const Vector& u, double phi)> x_update;
  // With B = -I the y-step is prox_{phi^-1 f_y}(A x - c + u); supply y_prox for that case.
  ProxBuilder y_prox;
  // General y-step argmin_y f_y(y) + phi/2 ||A x + B y - c + u||^2, used when y_prox is empty.
  std::function<Vector(const Vector& x, const Vector& u, double phi)> y_update;
  std::function<double(const Vector& x, const Vector& y)> objective;
};

struct AdmmResult {
  Vector x;
  Vector y;
  // Scaled dual at exit; the unscaled multiplier is phi * u.
  Vector u;
  double phi = 1.0;
  SolverReport report;
};

AdmmResult admm_solve(const AdmmProblem& problem, const Vector& x0, const Vector& y0, const AdmmConfig& cfg = {});

double penalty_update(double phi, double r_norm, double s_norm, const AdmmConfig& cfg);

// min 1/2 ||Y - X b||^2 + lambda ||b||_1; warm start defaults to zeros.
Solution admm_lasso_lambda(const Matrix& X, const Vector& Y, double lambda, const AdmmConfig& cfg = {},
                           const std::optional<Vector>& warm = std::nullopt);

// min 1/2 ||Y - X b||^2 subject to ||b||_1 <= tau.
Solution admm_lasso_tau(const Matrix& X, const Vector& Y, double tau, const AdmmConfig& cfg = {},
                        const std::optional<Vector>& warm = std::nullopt);

// y-step of the tau-problem; phi does not enter.
ProxBuilder l1_ball_prox_builder(double tau);

}  // namespace lsopt
