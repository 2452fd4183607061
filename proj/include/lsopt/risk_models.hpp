#pragma once

#include "lsopt/cd_engine.hpp"
#include "lsopt/portfolio_models.hpp"

#include <variant>

namespace lsopt {

struct VolatilityMeasure {};

// R(x) = -x'(mu - r) + xi sqrt(x' Sigma x).
struct StdevMeasure {
  double xi = 1.0;
  double r = 0.0;
};

using RiskMeasure = std::variant<VolatilityMeasure, StdevMeasure>;

enum class RbEngine { Ccd, Admm };

struct RbConfig {
  CdConfig cd = [] {
    CdConfig c;
    c.tol = 1e-12;
    c.max_cycles = 100000;
    return c;
  }();
  AdmmConfig admm = model_admm_config();
  // Barrier weight; non-positive selects sqrt(x0' Sigma x0) for CCD and 1 for ADMM.
  double lambda = 0.0;
  // Start; empty means equal weights.
  std::optional<Vector> x0;
};

struct RiskResult {
  PortfolioWeights weights;
  // Minimizer of R(x) - lambda sum RB_i ln x_i before the budget rescaling.
  Vector unscaled;
  SolverReport report;
};

RiskResult erc(const AssetUniverse& u, RbEngine engine = RbEngine::Ccd, const RbConfig& cfg = {});

// Budgets are normalized to sum to one.
RiskResult risk_budgeting(const AssetUniverse& u, const Vector& budgets, const RiskMeasure& measure = VolatilityMeasure{},
                          RbEngine engine = RbEngine::Ccd, const RbConfig& cfg = {});

// Risk contributions under the given measure; they sum to R(w).
Vector measure_contributions(const Vector& w, const AssetUniverse& u, const RiskMeasure& measure);
double risk_measure(const Vector& w, const AssetUniverse& u, const RiskMeasure& measure);

// prox of R/phi for the standard-deviation measure by the fixed point
// (xi Sigma / sigma(x) + phi I) x = (mu - r) + phi v.
Vector prox_stdev_measure(const Vector& v, double phi, const Vector& excess_mu, double xi, const Matrix& cov);

// Maximum diversification ratio portfolio. Long/short without a
// diversification constraint uses the closed form Sigma^-1 sigma.
RiskResult mdp(const AssetUniverse& u, bool long_only, const DiversificationConstraint& d = NoDiversification{},
               const AdmmConfig& cfg = model_admm_config());

// argmin 1/2 ln(x'Sx) - ln(x'sigma) + phi/2 |x - v|^2 subject to 1'x = 1,
// by projected Newton with a projected-gradient fallback.
Vector mdp_regularized_step(const Matrix& cov, const Vector& sigma, const Vector& v, double phi, const Vector& start);

}  // namespace lsopt
