#pragma once

#include "lsopt/portfolio_models.hpp"

#include <vector>

namespace lsopt {

enum class RoboFormulation { AdmmQp, AdmmCcd };

// f(x) = 1/2 (x - b)' S (x - b) - gamma (x - b)' mu
//      + rho1 |G1 (x - x_t)|_1 + rho2/2 |G2 (x - x_t)|^2
//      + rho1_ref |G1_ref (x - x_ref)|_1 + rho2_ref/2 |G2_ref (x - x_ref)|^2
//      - lambda sum RB_i ln x_i
// subject to 1'x = 1, 0 <= x <= upper, the linear set and the nonlinear sets.
// The l1 shaping matrices are diagonal and given by their diagonals.
struct RoboConfig {
  Vector benchmark;  // b; empty means zero
  Vector reference;  // x_ref; empty means zero
  Vector current;    // x_t; empty means zero
  double gamma = 0.0;
  double rho1 = 0.0;
  double rho2 = 0.0;
  double rho1_ref = 0.0;
  double rho2_ref = 0.0;
  double lambda = 0.0;
  Vector gamma1;      // empty means ones
  Vector gamma1_ref;  // empty means ones
  Matrix gamma2;      // empty means identity
  Matrix gamma2_ref;  // empty means identity
  Vector budgets;     // RB; empty means uniform
  Vector upper;       // empty means ones
  std::optional<Matrix> A;
  std::optional<Vector> B;
  std::optional<Matrix> C;
  std::optional<Vector> D;
  // Projections onto extra convex sets, applied in the y-step.
  std::vector<ProxFn> nonlinear;
  RoboFormulation formulation = RoboFormulation::AdmmCcd;
  AdmmConfig admm = [] {
    AdmmConfig c = model_admm_config();
    c.eps = c.eps_dual = 1e-11;
    return c;
  }();
};

struct RoboResult {
  PortfolioWeights weights;
  SolverReport report;
};

// Quadratic data of the smooth part: f = 1/2 x'Qx - x'R + const.
std::pair<Matrix, Vector> robo_quadratic(const AssetUniverse& u, const RoboConfig& cfg);

double robo_objective(const Vector& x, const AssetUniverse& u, const RoboConfig& cfg);

RoboResult robo_advisor(const AssetUniverse& u, const RoboConfig& cfg);

// Runs both formulations; throws FormulationDisagreement when they differ by
// more than tol in any weight. Returns the ADMM-CCD result.
RoboResult robo_advisor_checked(const AssetUniverse& u, const RoboConfig& cfg, double tol = 1e-3);

}  // namespace lsopt
