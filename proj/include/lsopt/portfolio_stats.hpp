#pragma once

#include "lsopt/universe.hpp"

#include <optional>

namespace lsopt {

struct StatsContext {
  std::optional<Vector> benchmark;
  std::optional<Vector> current;
  std::optional<Vector> reference;
};

struct PortfolioStats {
  double expected_return = 0.0;
  double volatility = 0.0;
  double herfindahl = 0.0;
  double effective_bets = 0.0;
  double diversification_ratio = 0.0;
  double shannon_entropy = 0.0;
  double leverage = 0.0;
  double long_exposure = 0.0;
  double short_exposure = 0.0;
  Vector risk_contributions;
  std::optional<double> turnover;
  std::optional<double> active_share;
  std::optional<double> tracking_error;
  std::optional<double> kl_divergence;
};

PortfolioStats stats(const Vector& w, const AssetUniverse& u, const StatsContext& ctx = {});

double portfolio_volatility(const Vector& w, const Matrix& cov);
double herfindahl(const Vector& w);
double effective_bets(const Vector& w);
double diversification_ratio(const Vector& w, const Vector& sigma, const Matrix& cov);

// -sum w_i ln w_i, with 0 ln 0 = 0; negative weights are rejected.
double shannon_entropy(const Vector& w);

// sum w_i ln(w_i / ref_i).
double kl_divergence(const Vector& w, const Vector& ref);

double turnover(const Vector& w, const Vector& current);
double active_share(const Vector& w, const Vector& benchmark);
double tracking_error(const Vector& w, const Vector& benchmark, const Matrix& cov);

// Risk contributions w_i dR/dw_i for R(w) = -w'(mu - r) + xi sqrt(w' Sigma w).
// mu = r and xi = 1 give the volatility decomposition.
Vector risk_contributions(const Vector& w, const Matrix& cov, const Vector& mu, double r, double xi);
Vector volatility_contributions(const Vector& w, const Matrix& cov);

}  // namespace lsopt
