#include "lsopt/portfolio_stats.hpp"

#include <cmath>

namespace lsopt {

namespace {

void check_weights(const Vector& w, Eigen::Index n) {
  require_size(w, n, "weights");
  require_finite(w, "weights");
}

}  // namespace

double portfolio_volatility(const Vector& w, const Matrix& cov) {
  if (cov.rows() != w.size() || cov.cols() != w.size()) fail(ErrorCode::DimensionMismatch, "covariance size");
  return std::sqrt(std::max(0.0, w.dot(cov * w)));
}

double herfindahl(const Vector& w) { return w.squaredNorm(); }

double effective_bets(const Vector& w) {
  const double h = herfindahl(w);
  if (h == 0.0) fail(ErrorCode::OutOfDomain, "zero portfolio has no effective bets");
  return 1.0 / h;
}

double diversification_ratio(const Vector& w, const Vector& sigma, const Matrix& cov) {
  require_size(sigma, w.size(), "sigma");
  const double vol = portfolio_volatility(w, cov);
  if (vol == 0.0) fail(ErrorCode::OutOfDomain, "zero-volatility portfolio");
  return w.dot(sigma) / vol;
}

double shannon_entropy(const Vector& w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) < 0.0) fail(ErrorCode::OutOfDomain, "entropy needs non-negative weights");
    if (w(i) > 0.0) s -= w(i) * std::log(w(i));
  }
  return s;
}

double kl_divergence(const Vector& w, const Vector& ref) {
  require_size(ref, w.size(), "reference");
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) < 0.0 || ref(i) <= 0.0) fail(ErrorCode::OutOfDomain, "KL needs w >= 0 and ref > 0");
    if (w(i) > 0.0) s += w(i) * std::log(w(i) / ref(i));
  }
  return s;
}

double turnover(const Vector& w, const Vector& current) {
  require_size(current, w.size(), "current weights");
  return (w - current).lpNorm<1>();
}

double active_share(const Vector& w, const Vector& benchmark) {
  require_size(benchmark, w.size(), "benchmark");
  return 0.5 * (w - benchmark).lpNorm<1>();
}

double tracking_error(const Vector& w, const Vector& benchmark, const Matrix& cov) {
  require_size(benchmark, w.size(), "benchmark");
  return portfolio_volatility(w - benchmark, cov);
}

Vector risk_contributions(const Vector& w, const Matrix& cov, const Vector& mu, double r, double xi) {
  require_size(mu, w.size(), "mu");
  const Vector sw = cov * w;
  const double vol = std::sqrt(std::max(0.0, w.dot(sw)));
  if (vol == 0.0) fail(ErrorCode::OutOfDomain, "zero-volatility portfolio");
  return w.cwiseProduct(-(mu.array() - r).matrix() + xi * sw / vol);
}

Vector volatility_contributions(const Vector& w, const Matrix& cov) {
  return risk_contributions(w, cov, Vector::Zero(w.size()), 0.0, 1.0);
}

PortfolioStats stats(const Vector& w, const AssetUniverse& u, const StatsContext& ctx) {
  check_weights(w, u.size());
  PortfolioStats s;
  s.expected_return = w.dot(u.mu);
  s.volatility = portfolio_volatility(w, u.cov);
  s.herfindahl = herfindahl(w);
  s.effective_bets = s.herfindahl > 0.0 ? 1.0 / s.herfindahl : 0.0;
  s.diversification_ratio = s.volatility > 0.0 ? w.dot(u.sigma) / s.volatility : 0.0;
  s.shannon_entropy = (w.array() >= 0.0).all() ? shannon_entropy(w) : std::nan("");
  s.leverage = w.lpNorm<1>();
  s.long_exposure = w.cwiseMax(0.0).sum();
  s.short_exposure = (-w).cwiseMax(0.0).sum();
  s.risk_contributions = s.volatility > 0.0 ? volatility_contributions(w, u.cov) : Vector::Zero(w.size());
  if (ctx.current) s.turnover = turnover(w, *ctx.current);
  if (ctx.benchmark) {
    s.active_share = active_share(w, *ctx.benchmark);
    s.tracking_error = tracking_error(w, *ctx.benchmark, u.cov);
  }
  if (ctx.reference && (w.array() >= 0.0).all()) s.kl_divergence = kl_divergence(w, *ctx.reference);
  return s;
}

}  // namespace lsopt
