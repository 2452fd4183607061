#include "lsopt/reproduce.hpp"

#include "lsopt/cd_engine.hpp"
#include "lsopt/data_fixtures.hpp"
#include "lsopt/portfolio_stats.hpp"
#include "lsopt/risk_models.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace lsopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Table cells are in percent; 0.01 percentage points.
constexpr double kCellTol = 0.01;

std::string fmt(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string asset(int i) { return "x" + std::to_string(i + 1); }

// Columns of a reference weight table in percent.
struct Column {
  double level;
  std::vector<double> weights;
  double extra;
};

}  // namespace

double ReproCheck::diff() const {
  if (std::isinf(expected) || std::isinf(actual)) return expected == actual ? 0.0 : kInf;
  return std::abs(actual - expected);
}

bool ReproCheck::ok() const {
  switch (kind) {
    case Kind::AtMost:
      return actual <= expected;
    case Kind::AtLeast:
      return actual >= expected;
    case Kind::Near:
      break;
  }
  return diff() <= tol;
}

bool Reproduction::ok() const {
  for (const auto& c : checks) {
    if (!c.ok()) return false;
  }
  return true;
}

double Reproduction::max_diff() const {
  double m = 0.0;
  for (const auto& c : checks) {
    if (c.kind == ReproCheck::Kind::Near) m = std::max(m, c.diff());
  }
  return m;
}

Reproduction reproduce_table4() {
  const std::vector<Column> cols = {
      {1.0, {0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 100.00, 0.00}, 0.00},
      {2.0, {3.22, 12.75, 0.00, 10.13, 0.00, 5.36, 68.53, 0.00}, 1.59},
      {3.0, {9.60, 14.14, 0.00, 15.01, 0.00, 8.95, 52.31, 0.00}, 3.10},
      {4.0, {13.83, 15.85, 0.00, 17.38, 0.00, 12.42, 40.01, 0.50}, 5.90},
      {5.0, {15.18, 16.19, 0.00, 17.21, 0.71, 13.68, 31.52, 5.51}, 10.38},
      {6.0, {15.05, 15.89, 0.07, 16.09, 5.10, 14.01, 25.13, 8.66}, 18.31},
      {6.5, {14.69, 15.39, 2.05, 15.40, 6.33, 13.80, 22.92, 9.41}, 23.45},
      {7.0, {14.27, 14.82, 4.21, 14.72, 7.64, 13.56, 20.63, 10.14}, 31.73},
      {7.5, {13.75, 14.13, 6.79, 13.97, 9.17, 13.25, 18.00, 10.95}, 49.79},
      {8.0, {12.50, 12.50, 12.50, 12.50, 12.50, 12.50, 12.50, 12.50}, kInf},
  };
  const AssetUniverse u = parameter_set_1().universe;
  const Vector up = Vector::Ones(u.size());

  Reproduction r;
  r.name = "table4";
  r.header.push_back("N-");
  std::vector<std::vector<std::string>> body(9);
  for (int i = 0; i < 8; ++i) body[static_cast<std::size_t>(i)].push_back(asset(i));
  body[8].push_back("lambda*");
  for (const Column& c : cols) {
    r.header.push_back(fmt(c.level, 2));
    const HerfindahlResult h = gmv_herfindahl(u, up, c.level);
    for (int i = 0; i < 8; ++i) {
      const double v = 100.0 * h.weights.w(i);
      body[static_cast<std::size_t>(i)].push_back(fmt(v, 2));
      r.checks.push_back({asset(i) + " @ " + fmt(c.level, 2), c.weights[static_cast<std::size_t>(i)], v, kCellTol});
    }
    const double lam = 100.0 * h.lambda.value_or(kInf);
    body[8].push_back(fmt(lam, 2));
    r.checks.push_back({"lambda* @ " + fmt(c.level, 2), c.extra, lam, 0.1});
  }
  r.rows = std::move(body);
  return r;
}

Reproduction reproduce_table5() {
  // Level 0 is the unconstrained long-only MDP; the long/short column comes first.
  const std::vector<double> ls = {41.81, 51.88, 8.20, -0.43, -0.26, -0.38, -0.51, -0.31};
  const std::vector<Column> cols = {
      {0.0, {41.04, 50.92, 8.05, 0.00, 0.00, 0.00, 0.00, 0.00}, 2.30},
      {3.0, {35.74, 43.91, 10.12, 2.48, 0.92, 2.03, 3.47, 1.32}, 3.00},
      {4.0, {30.29, 36.68, 11.52, 5.12, 2.28, 4.36, 6.68, 3.07}, 4.00},
      {5.0, {26.08, 31.05, 12.33, 7.16, 3.60, 6.28, 8.85, 4.65}, 5.00},
      {6.0, {22.44, 26.12, 12.80, 8.90, 5.02, 8.02, 10.44, 6.27}, 6.00},
      {7.0, {18.83, 21.19, 13.01, 10.51, 6.85, 9.79, 11.65, 8.17}, 7.00},
  };
  const AssetUniverse u = parameter_set_2().universe;

  Reproduction r;
  r.name = "table5";
  r.header = {"N-", "L/S"};
  std::vector<std::vector<std::string>> body(9);
  for (int i = 0; i < 8; ++i) body[static_cast<std::size_t>(i)].push_back(asset(i));
  body[8].push_back("N(x)");

  const Vector wl = mdp(u, false).weights.w;
  for (int i = 0; i < 8; ++i) {
    const double v = 100.0 * wl(i);
    body[static_cast<std::size_t>(i)].push_back(fmt(v, 2));
    r.checks.push_back({asset(i) + " @ L/S", ls[static_cast<std::size_t>(i)], v, kCellTol});
  }
  body[8].push_back("");

  for (const Column& c : cols) {
    r.header.push_back(fmt(c.level, 2));
    const DiversificationConstraint d =
        c.level > 0.0 ? DiversificationConstraint{EffectiveBets{c.level}} : DiversificationConstraint{};
    const Vector w = mdp(u, true, d).weights.w;
    for (int i = 0; i < 8; ++i) {
      const double v = 100.0 * w(i);
      body[static_cast<std::size_t>(i)].push_back(fmt(v, 2));
      r.checks.push_back({asset(i) + " @ " + fmt(c.level, 2), c.weights[static_cast<std::size_t>(i)], v, kCellTol});
    }
    const double nb = effective_bets(w);
    body[8].push_back(fmt(nb, 2));
    r.checks.push_back({"N(x) @ " + fmt(c.level, 2), c.extra, nb, 0.01});
  }
  r.rows = std::move(body);
  return r;
}

Reproduction reproduce_erc() {
  const std::vector<double> expected = {11.40, 12.29, 5.49, 11.91, 6.65, 10.81, 33.52, 7.93};
  const AssetUniverse u = parameter_set_1().universe;
  const Vector x0 = Vector::Constant(u.size(), 1.0 / static_cast<double>(u.size()));
  CdConfig cfg;
  cfg.tol = 1e-8;
  const Solution s = ccd_erc(u.cov, 0.0, x0, cfg);
  if (!s.report.converged()) fail(ErrorCode::MaxIterExceeded, "ERC CCD did not converge");
  const Vector w = s.x / s.x.sum();
  const Vector rc = volatility_contributions(w, u.cov);

  Reproduction r;
  r.name = "erc";
  r.header = {"asset", "weight", "risk_contribution"};
  for (int i = 0; i < 8; ++i) {
    const double v = 100.0 * w(i);
    r.rows.push_back({asset(i), fmt(v, 2), fmt(100.0 * rc(i) / rc.sum(), 2)});
    r.checks.push_back({asset(i), expected[static_cast<std::size_t>(i)], v, kCellTol});
  }
  r.rows.push_back({"cycles", std::to_string(s.report.iterations), ""});
  r.checks.push_back(
      {"CCD cycles", 10.0, static_cast<double>(s.report.iterations), 0.0, ReproCheck::Kind::AtMost});
  return r;
}

Reproduction reproduce_lasso_trace(std::uint64_t seed) {
  const LassoData data = lasso_synthetic(10000, 50, seed);
  const double lambda = 900.0;
  const Vector x0 = Vector::Zero(data.X.cols());
  CdConfig tight;
  tight.tol = 1e-14;
  tight.max_cycles = 100000;
  const Vector limit = cd_lasso(data.X, data.Y, lambda, x0, tight).value();
  CdConfig cfg;
  cfg.tol = 1e-14;
  cfg.max_cycles = 20;
  const std::vector<Vector> trace = cd_lasso_trace(data.X, data.Y, lambda, x0, cfg);

  Reproduction r;
  r.name = "lasso_trace";
  r.header = {"cycle", "distance"};
  for (Eigen::Index j = 0; j < data.X.cols(); ++j) r.header.push_back("beta" + std::to_string(j + 1));
  int settled = -1;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const double dist = (trace[k] - limit).cwiseAbs().maxCoeff();
    if (settled < 0 && dist <= 1e-6) settled = static_cast<int>(k);
    std::vector<std::string> row = {std::to_string(k), fmt_g(dist)};
    for (Eigen::Index j = 0; j < trace[k].size(); ++j) row.push_back(fmt_g(trace[k](j)));
    r.rows.push_back(std::move(row));
  }
  const double cycles = settled < 0 ? kInf : static_cast<double>(settled);
  r.checks.push_back({"cycles to 1e-6 of the limit", 5.0, cycles, 0.0, ReproCheck::Kind::AtMost});
  return r;
}

Reproduction reproduce_box_qp_trace() {
  const BoxQpExample e = box_qp_example();
  const Vector lo = Vector::Constant(5, e.lower);
  const Vector hi = Vector::Constant(5, e.upper);
  const Vector free = Vector::Constant(5, kInf);

  Reproduction r;
  r.name = "box_qp_trace";
  r.header = {"run", "cycle", "x1", "x2", "x3", "x4", "x5", "objective"};
  auto run = [&](const std::string& name, const Vector& lower, const Vector& upper, double start) {
    CdConfig cfg;
    cfg.tol = 1e-8;
    cfg.max_cycles = 100000;
    const Vector x0 = Vector::Constant(5, start);
    const Solution s = ccd_qp_box(e.Q, e.R, lower, upper, x0, cfg);
    if (!s.report.converged()) fail(ErrorCode::MaxIterExceeded, "box QP CCD did not converge");
    // Replays each prefix of the run to log the iterate after every cycle.
    for (int k = 0; k <= s.report.iterations; ++k) {
      Vector x = x0;
      if (k > 0) {
        CdConfig part = cfg;
        part.tol = std::numeric_limits<double>::min();
        part.max_cycles = k;
        x = ccd_qp_box(e.Q, e.R, lower, upper, x0, part).x;
      }
      std::vector<std::string> row = {name, std::to_string(k)};
      for (int i = 0; i < 5; ++i) row.push_back(fmt_g(x(i)));
      row.push_back(fmt_g(0.5 * x.dot(e.Q * x) - x.dot(e.R)));
      r.rows.push_back(std::move(row));
    }
    return static_cast<double>(s.report.iterations);
  };
  using K = ReproCheck::Kind;
  r.checks.push_back({"box cycles from 0", 50.0, run("box_from_0", lo, hi, 0.0), 0.0, K::AtMost});
  r.checks.push_back({"box cycles from 1", 10.0, run("box_from_1", lo, hi, 1.0), 0.0, K::AtMost});
  r.checks.push_back({"unconstrained cycles", 101.0, run("unconstrained", -free, free, 0.0), 0.0, K::AtLeast});
  return r;
}

const std::vector<std::string>& reproduction_names() {
  static const std::vector<std::string> names = {"table4", "table5", "erc", "lasso_trace", "box_qp_trace"};
  return names;
}

Reproduction reproduce(const std::string& name) {
  if (name == "table4") return reproduce_table4();
  if (name == "table5") return reproduce_table5();
  if (name == "erc") return reproduce_erc();
  if (name == "lasso_trace") return reproduce_lasso_trace();
  if (name == "box_qp_trace") return reproduce_box_qp_trace();
  fail(ErrorCode::InvalidArgument, "unknown reproduction '" + name + "'");
}

std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(header);
  for (const auto& row : rows) line(row);
  return os.str();
}

std::string diff_report(const Reproduction& r) {
  std::ostringstream os;
  int bad = 0;
  for (const auto& c : r.checks) {
    if (c.ok()) continue;
    ++bad;
    const char* rel = c.kind == ReproCheck::Kind::AtMost ? "<=" : c.kind == ReproCheck::Kind::AtLeast ? ">=" : "~";
    os << "MISMATCH " << c.label << ": got " << fmt_g(c.actual) << ", want " << rel << ' ' << fmt_g(c.expected);
    if (c.kind == ReproCheck::Kind::Near) os << " (|diff| " << fmt_g(c.diff()) << " > " << fmt_g(c.tol) << ')';
    os << '\n';
  }
  os << r.name << ": " << r.checks.size() - static_cast<std::size_t>(bad) << '/' << r.checks.size()
     << " checks within tolerance, max |diff| " << fmt(r.max_diff(), 6) << '\n';
  return os.str();
}

}  // namespace lsopt
