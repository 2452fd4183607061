#pragma once

#include "lsopt/portfolio_stats.hpp"
#include "lsopt/qp_bridge.hpp"
#include "lsopt/universe.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace lsopt {

struct PortfolioWeights {
  Vector w;
  bool long_only = false;
  bool budget = true;

  Eigen::Index size() const { return w.size(); }
  double operator()(Eigen::Index i) const { return w(i); }
};

// Single exit point for model outputs: clears solver dust below zero for
// long-only portfolios and restores the budget exactly. Anything further off
// than the solver tolerances is an error.
PortfolioWeights normalize_weights(Vector w, bool long_only, bool budget = true);

struct PortfolioConstraints {
  bool budget = true;
  bool long_only = false;
  std::optional<Vector> lower;
  std::optional<Vector> upper;
  std::optional<Matrix> A;
  std::optional<Vector> B;
  std::optional<Matrix> C;
  std::optional<Vector> D;

  static PortfolioConstraints long_only_budget() {
    PortfolioConstraints c;
    c.long_only = true;
    return c;
  }
};

// Adds budget, bounds and linear blocks to a QP with the given Q and R.
QpProblem portfolio_qp(const Matrix& Q, const Vector& R, const PortfolioConstraints& c);

// argmin 1/2 x'Sx - gamma x'mu.
PortfolioWeights mvo_gamma(const AssetUniverse& u, double gamma, const PortfolioConstraints& c = {},
                           const QpConfig& cfg = {});

struct ReturnTarget {
  double value;
};
struct VolatilityTarget {
  double value;
};
using MvoTarget = std::variant<ReturnTarget, VolatilityTarget>;

struct TargetedPortfolio {
  PortfolioWeights weights;
  double gamma = 0.0;
};

// Bisection on gamma until mu(x) or sigma(x) hits the target.
TargetedPortfolio mvo_target(const AssetUniverse& u, const MvoTarget& target, const PortfolioConstraints& c = {},
                             const QpConfig& cfg = {});

// argmin 1/2 (x - b)'S(x - b) - gamma (x - b)'mu, i.e. R = gamma mu + S b.
PortfolioWeights mvo_benchmark(const AssetUniverse& u, const Vector& b, double gamma,
                               const PortfolioConstraints& c = {}, const QpConfig& cfg = {});

struct SamplingResult {
  PortfolioWeights weights;
  double tracking_error = 0.0;
  std::vector<Eigen::Index> removed;
};

// Tracking-error QP re-solved with the smallest positive weight forced to zero
// until n_x names remain. Ties go to the lowest index.
SamplingResult index_sampling(const AssetUniverse& u, const Vector& b, Eigen::Index n_x,
                              const PortfolioConstraints& c = PortfolioConstraints::long_only_budget(),
                              const QpConfig& cfg = {});

struct RebalanceResult {
  PortfolioWeights weights;
  Vector buy;
  Vector sell;
};

// Long-only MVO with sum |x - x_bar| <= cap, via the 3n-variable QP in (x, x+, x-).
RebalanceResult mvo_turnover(const AssetUniverse& u, double gamma, const Vector& x_bar, double cap,
                             const QpConfig& cfg = {});

// Long-only MVO paying bid/ask costs out of the budget:
// 1'x + c-'x- + c+'x+ = 1 with the costs also charged in the objective.
RebalanceResult mvo_costs(const AssetUniverse& u, double gamma, const Vector& x_bar, const Vector& c_minus,
                          const Vector& c_plus, const QpConfig& cfg = {});

// ADMM settings used by the allocation models: absolute residuals of 1e-10.
AdmmConfig model_admm_config();

enum class HerfindahlMethod { LambdaBisection, Admm };

struct HerfindahlResult {
  PortfolioWeights weights;
  // Ridge weight of Q = S + lambda I; +inf for the equally weighted limit. Empty for ADMM.
  std::optional<double> lambda;
  SolverReport report;
};

// Long-only GMV with 1/sum x_i^2 >= n_min and x <= upper.
HerfindahlResult gmv_herfindahl(const AssetUniverse& u, const Vector& upper, double n_min,
                                HerfindahlMethod method = HerfindahlMethod::LambdaBisection);

struct EffectiveBets {
  double n_min;
};
struct ShannonEntropyFloor {
  double se_min;
};
struct NoDiversification {};
using DiversificationConstraint = std::variant<NoDiversification, EffectiveBets, ShannonEntropyFloor>;

// ADMM: hyperplane in the x-step, box intersected with the diversification set in the y-step.
HerfindahlResult gmv_diversified(const AssetUniverse& u, const Vector& upper, const DiversificationConstraint& d,
                                 const AdmmConfig& cfg = model_admm_config());

// Projection onto {x : -sum x_i ln x_i >= se_min}.
Vector project_entropy_floor(const Vector& v, double se_min);

struct RebalanceContext {
  Vector current;
  std::optional<Vector> c_minus;
  std::optional<Vector> c_plus;
  double cost_scale = 1.0;
  std::optional<double> turnover_cap;
  std::optional<Vector> upper;
};

// argmin 1/2 x'Sx + cost(x | x_t) over the long-only budget set, optionally with a turnover cap.
HerfindahlResult rebalance_penalized(const AssetUniverse& u, const RebalanceContext& ctx,
                                     const AdmmConfig& cfg = model_admm_config());

// min KL(x | ref) subject to budget, 0 <= x <= 1, mu'x >= mu_min, sigma(x) <= sigma_max.
HerfindahlResult kl_portfolio(const AssetUniverse& u, const Vector& ref, double mu_min, double sigma_max,
                              const AdmmConfig& cfg = model_admm_config());

// Projection onto {x : x' S x <= r^2} for symmetric PSD S.
class EllipsoidProjector {
 public:
  EllipsoidProjector(const Matrix& S, double radius);
  Vector operator()(const Vector& v) const;

 private:
  Matrix vecs_;
  Vector vals_;
  double r2_;
};

// min 1/2 x'Dx for a dissimilarity matrix D over the given constraints (not
// necessarily convex); restarts move towards vertices in index order.
HerfindahlResult rqe_portfolio(const Matrix& D, const PortfolioConstraints& c = PortfolioConstraints::long_only_budget(),
                               const QpConfig& cfg = {});

// x-step shared by the budget-constrained ADMM models:
// argmin 1/2 x'Qx - x'r + phi/2 |x - v|^2 subject to 1'x = 1.
class BudgetQpStep {
 public:
  explicit BudgetQpStep(Matrix Q);
  Vector operator()(const Vector& r, const Vector& v, double phi);

 private:
  Matrix Q_;
  double phi_ = -1.0;
  SpdFactor factor_;
  Vector minv_one_;
};

// |lambda_min| for symmetric M when M is indefinite, 0 otherwise, by power iteration.
double negative_curvature(const Matrix& M);

}  // namespace lsopt
